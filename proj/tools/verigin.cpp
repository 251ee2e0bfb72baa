#include "verigin/io.hpp"
#include "verigin/kernels.hpp"

#include <cstring>
#include <iostream>
#include <string>

namespace {

void usage() {
    std::cout << "usage:\n"
                 "  verigin run <config> [--corrupt-step=N]   run the discrete flow + certificates\n"
                 "  verigin check <run-dir>                   re-verify certificates from exported files\n"
                 "  verigin oracle <config>                   tiny-instance brute-force comparison\n"
                 "  verigin --print-defaults                  print the default configuration\n"
                 "\n"
                 "environment: VERIGIN_THREADS caps subsolver parallelism (0 = serial, default)\n";
}

} // namespace

int main(int argc, char** argv) {
    verigin::kernels::init_threads_from_env();
    if (argc < 2) {
        usage();
        return 1;
    }
    const std::string cmd = argv[1];
    if (cmd == "--print-defaults") {
        std::cout << verigin::default_config_text();
        return 0;
    }
    if (cmd == "run") {
        if (argc < 3) {
            usage();
            return 1;
        }
        long long corrupt = -1;
        for (int i = 3; i < argc; ++i) {
            const std::string a = argv[i];
            if (a.rfind("--corrupt-step=", 0) == 0) {
                corrupt = std::atoll(a.c_str() + std::strlen("--corrupt-step="));
            } else {
                std::cerr << "unknown option: " << a << "\n";
                return 1;
            }
        }
        return verigin::run_config_file(argv[2], corrupt);
    }
    if (cmd == "check") {
        if (argc != 3) {
            usage();
            return 1;
        }
        return verigin::check_run_dir(argv[2]);
    }
    if (cmd == "oracle") {
        if (argc != 3) {
            usage();
            return 1;
        }
        try {
            return verigin::oracle_compare(verigin::parse_config(argv[2]));
        } catch (const std::exception& ex) {
            std::cerr << "verigin oracle: error: " << ex.what() << "\n";
            return 1;
        }
    }
    usage();
    return 1;
}
