#pragma once

#include "verigin/grid.hpp"

namespace verigin {

struct EnergyParams {
    double m = 1.0;      // free-energy exponent, >= 1
    double lambda = 1.0; // phase-transition constant, > 0
    double c_omega = 0.0;
    double sigma = 1.0; // perimeter scale (unit in the model; configurable)

    void validate() const;
};

struct EnergyBreakdown {
    double perimeter = 0.0; // sigma * anisotropic perimeter
    double internal = 0.0;  // int f(rho)
    double coupling = 0.0;  // int chi (lambda - rho)
    double total = 0.0;     // perimeter + internal + coupling + c_omega
};

// f(s) = s log s (m=1, 0 log 0 := 0), s^m/(m-1) (m>1)
double f(double s, double m);
// f'(s) = log s + 1 (m=1), m/(m-1) s^(m-1) (m>1)
double f_prime(double s, double m);

// perimeter relative to Omega: sum over interior jump faces of face area (unscaled)
double perimeter(const PhaseField& chi);

EnergyBreakdown total_energy(const ScalarField& rho, const PhaseField& chi, const EnergyParams& p);

// pi = rho^m - lambda chi
ScalarField pressure(const ScalarField& rho, const PhaseField& chi, const EnergyParams& p);

// f'(rho) - chi + 1; -inf sentinel where rho=0 and m=1
ScalarField chemical_potential(const ScalarField& rho, const PhaseField& chi, const EnergyParams& p);

// smallest additive constant we certify: guarantees total_energy >= 0 over unit-mass rho >= 0
double default_c_omega(const EnergyParams& p, const Grid& grid);

} // namespace verigin
