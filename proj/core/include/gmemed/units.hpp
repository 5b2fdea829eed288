// units.hpp — conversion between spectroscopic units and the internal unit system
//
// Energies enter and leave the library in cm^-1. Internally everything runs in
// angular frequency (rad/ps) with hbar = 1, so an energy E [cm^-1] becomes
// 2*pi*c*E [rad/ps], time is in ps and beta = 1/(k_B T) is in ps.

#pragma once

#include <numbers>

namespace gmemed::units {

inline constexpr double speed_of_light_cm_per_ps = 2.99792458e-2;

/// rad/ps per cm^-1
inline constexpr double angular_per_wavenumber =
    2.0 * std::numbers::pi * speed_of_light_cm_per_ps;

/// k_B in cm^-1 per kelvin
inline constexpr double boltzmann_wavenumber_per_kelvin = 0.6950348004;

inline constexpr double to_angular(double wavenumber) noexcept {
    return wavenumber * angular_per_wavenumber;
}

inline constexpr double to_wavenumber(double angular) noexcept {
    return angular / angular_per_wavenumber;
}

/// k_B T in cm^-1
inline constexpr double thermal_energy_wavenumber(double kelvin) noexcept {
    return boltzmann_wavenumber_per_kelvin * kelvin;
}

/// beta in cm (inverse cm^-1)
inline constexpr double beta_wavenumber(double kelvin) noexcept {
    return 1.0 / thermal_energy_wavenumber(kelvin);
}

/// beta in ps (hbar = 1)
inline constexpr double beta_ps(double kelvin) noexcept {
    return 1.0 / to_angular(thermal_energy_wavenumber(kelvin));
}

inline constexpr double fs_to_ps(double fs) noexcept { return fs * 1e-3; }

} // namespace gmemed::units
