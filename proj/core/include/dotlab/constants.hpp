#pragma once

// CODATA 2022 values, SI units.
namespace dotlab::constants {

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double planck = 6.62607015e-34;               // J s
inline constexpr double hbar = planck / (2.0 * pi);            // J s
inline constexpr double electron_mass = 9.1093837139e-31;      // kg
inline constexpr double vacuum_permittivity = 8.8541878188e-12;  // F/m

inline constexpr double nm = 1e-9;

// 1 eV expressed in Hz (E/h).
inline constexpr double ev_to_hz = elementary_charge / planck;

}  // namespace dotlab::constants
