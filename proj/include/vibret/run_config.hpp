#pragma once

// Run configuration: flat `key = value` files, command-line overrides and
// the initial-state mini-language.
//
// Initial states, either as occupation labels
//     (2110) + (2101); b = 0.7071, 0.7071
// or as excitations out of the closed-shell ground state
//     HOMO->LUMO, HOMO->LUMO+1; b = 0.7071, 0.7071
// Excitation terms may chain moves with '&' and carry a spin suffix
// (HOMO->LUMO:down). `GS` is the unexcited ground determinant.
// Without `b = ...` the terms get equal weights.

#include "vibret/dynamics.hpp"
#include "vibret/electronic.hpp"
#include "vibret/model.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vibret {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Rdm2Policy { automatic, on, off };
enum class Sampling { wigner, equilibrium };

struct InitialStateSpec {
    bool labels = false;
    std::vector<std::string> label_terms;               // label mode
    std::vector<std::vector<Excitation>> excitation_terms;  // excitation mode
    std::vector<double> amplitudes;                     // normalized

    [[nodiscard]] std::size_t size() const { return labels ? label_terms.size() : excitation_terms.size(); }
};

/// Parses the mini-language for an n_orbitals chain. Amplitudes must be
/// normalized to 1e-3 and are then renormalized exactly.
[[nodiscard]] InitialStateSpec parse_initial_state(const std::string& text, int n_orbitals);

/// Builds the superposition over the given orbitals (ascending energies).
[[nodiscard]] SuperpositionState build_initial_state(const InitialStateSpec& spec, const OrbitalSet& orbitals);

struct RunConfig {
    SshParams params;
    ClampMask clamp;
    std::string initial_state = "HOMO->LUMO, HOMO->LUMO+1";
    std::optional<std::array<std::string, 3>> triad = std::array<std::string, 3>{"(2110)", "(2101)", "(1210)"};
    std::uint64_t trajectories = 1;
    std::optional<std::uint64_t> seed;
    Sampling sampling = Sampling::wigner;
    IntegratorConfig integrator;
    double record_interval = 10.0;  // fs
    Rdm2Policy rdm2 = Rdm2Policy::automatic;
    std::string output_dir = "vibret-out";
    std::uint64_t checkpoint_every = 0;  // trajectories; 0 = only at the end
    double checkpoint_interval = 0.0;    // fs of one trajectory, serial runs only; 0 = off
    int workers = 1;
    bool deterministic = true;
    bool resume = false;

    /// Sets one key; throws ConfigError on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    /// Cross-field checks; also fills integrator.record_stride.
    void validate();

    [[nodiscard]] bool record_rdm2() const;
    /// Canonical dump of every result-affecting key.
    [[nodiscard]] std::string canonical() const;
    /// canonical() plus the analysis keys, loadable by parse_config.
    [[nodiscard]] std::string dump() const;
    /// FNV-1a of canonical(), as 16 hex digits.
    [[nodiscard]] std::string hash() const;
};

/// `key = value` lines; '#' starts a comment.
[[nodiscard]] RunConfig parse_config(const std::string& text, RunConfig base = {});
[[nodiscard]] RunConfig load_config(const std::string& path, RunConfig base = {});

}  // namespace vibret
