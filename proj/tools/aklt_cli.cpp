// Copyright 2026 The aklt-prep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment driver. Every subcommand reads an optional JSON config, applies
// flag overrides, and writes one artifact into --out that records the
// effective config, the seed and the library version.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aklt/aklt.hpp"
#include "aklt/selftest.hpp"

namespace {

using nlohmann::json;
using namespace aklt;
using protocol::CorrectionMode;
using protocol::Method;
using sim::OutcomePolicy;

enum ExitCode : int {
    kOk = 0,
    kCriteriaFailed = 1,
    kInvalidConfig = 2,
    kZeroProbability = 3,
    kRuntimeError = 4,
};

struct ExperimentConfig {
    std::string command;
    int N = 6;
    std::string prep = "fusion";
    std::size_t shots = 100000;
    std::uint64_t seed = 0;
    NoiseModel noise;
    bool exact = false;
    std::optional<std::vector<int>> forced_outcomes;
    std::string out = ".";
    int lmax = 8;
    std::string correction = "frame";
    bool postselect = true;
    std::string target = "+";
    std::optional<double> theta, phi;
    std::size_t paths = 16;
    std::string variant = "ghz";
    std::vector<double> p2_grid{0.0, 0.005, 0.01, 0.02};
    std::vector<int> criteria;

    /// Everything that determines the results (the output directory does not).
    json to_json() const {
        json j{{"command", command},   {"N", N},
               {"prep", prep},         {"shots", shots},
               {"seed", seed},         {"noise", noise::to_json(noise)},
               {"exact", exact},       {"lmax", lmax},
               {"correction", correction}, {"postselect", postselect},
               {"target", target},     {"paths", paths},
               {"variant", variant},   {"p2_grid", p2_grid}};
        j["forced_outcomes"] = forced_outcomes ? json(*forced_outcomes) : json(nullptr);
        if (theta) j["theta"] = *theta;
        if (phi) j["phi"] = *phi;
        if (!criteria.empty()) j["criteria"] = criteria;
        return j;
    }
};

template <class T> T get_as(const json &v, const std::string &key) {
    try {
        return v.get<T>();
    } catch (const json::exception &) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

void apply_json(ExperimentConfig &c, const json &j) {
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto &[key, v] : j.items()) {
        if (key == "command") {
            if (get_as<std::string>(v, key) != c.command)
                throw ConfigError("config is for command '" + v.get<std::string>() + "', not '" + c.command + "'");
        } else if (key == "N") c.N = get_as<int>(v, key);
        else if (key == "prep") c.prep = get_as<std::string>(v, key);
        else if (key == "shots") c.shots = get_as<std::size_t>(v, key);
        else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
        else if (key == "noise") c.noise = noise::model_from_json(v);
        else if (key == "exact") c.exact = get_as<bool>(v, key);
        else if (key == "forced_outcomes") {
            if (v.is_null()) c.forced_outcomes.reset();
            else c.forced_outcomes = get_as<std::vector<int>>(v, key);
        } else if (key == "out") c.out = get_as<std::string>(v, key);
        else if (key == "lmax") c.lmax = get_as<int>(v, key);
        else if (key == "correction") c.correction = get_as<std::string>(v, key);
        else if (key == "postselect") c.postselect = get_as<bool>(v, key);
        else if (key == "target") c.target = get_as<std::string>(v, key);
        else if (key == "theta") c.theta = get_as<double>(v, key);
        else if (key == "phi") c.phi = get_as<double>(v, key);
        else if (key == "paths") c.paths = get_as<std::size_t>(v, key);
        else if (key == "variant") c.variant = get_as<std::string>(v, key);
        else if (key == "p2_grid") c.p2_grid = get_as<std::vector<double>>(v, key);
        else if (key == "criteria") c.criteria = get_as<std::vector<int>>(v, key);
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
}

std::vector<int> parse_int_list(const std::string &s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception &) {
            throw ConfigError("'" + item + "' in list '" + s + "' is not an integer");
        }
    }
    return out;
}

void validate(const ExperimentConfig &c) {
    if (c.N < 1) throw ConfigError("N must be at least 1");
    if (c.shots < 1) throw ConfigError("shots must be at least 1");
    if (c.lmax < 3) throw ConfigError("lmax must be at least 3 for the correlation-length fit");
    if (c.paths < 1) throw ConfigError("paths must be at least 1");
    protocol::method_from_name(c.prep);
    protocol::correction_from_name(c.correction);
    c.noise.validate();
    if (c.theta.has_value() != c.phi.has_value()) throw ConfigError("theta and phi must be given together");
    for (double p : c.p2_grid)
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p2_grid entries must lie in [0, 1]");
}

// ---------------------------------------------------------------------------
// Artifacts

std::filesystem::path artifact_path(const ExperimentConfig &c, const std::string &name) {
    std::filesystem::create_directories(c.out);
    return std::filesystem::path(c.out) / name;
}

json provenance(const ExperimentConfig &c) {
    return {{"version", kVersion}, {"seed", c.seed}, {"config", c.to_json()}};
}

void write_json(const ExperimentConfig &c, const std::string &name, json body) {
    json doc = provenance(c);
    doc["result"] = std::move(body);
    const auto path = artifact_path(c, name);
    std::ofstream(path) << doc.dump(2) << '\n';
    std::cout << "wrote " << path.string() << '\n';
}

/// CSV with one leading comment line carrying the provenance.
void write_csv(const ExperimentConfig &c, const std::string &name, const std::string &table) {
    const auto path = artifact_path(c, name);
    std::ofstream(path) << "# " << provenance(c).dump() << '\n' << table;
    std::cout << "wrote " << path.string() << '\n';
}

OutcomePolicy fusion_policy(const ExperimentConfig &c) {
    return c.forced_outcomes ? OutcomePolicy::forced(*c.forced_outcomes) : OutcomePolicy::sample(c.seed);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_prepare(const ExperimentConfig &c) {
    const Method method = protocol::method_from_name(c.prep);
    const auto mode = protocol::correction_from_name(c.correction);
    json res{{"N", c.N}, {"prep", c.prep}, {"simulated", c.exact}};
    if (method == Method::Projector) {
        auto pol = OutcomePolicy::sample(c.seed);
        auto r = protocol::detail::projector_circuit(c.N, pol, false, true);
        const auto trial = protocol::prepare_projector_baseline(c.N, c.seed);
        res["depth"] = r.depth();
        res["num_qubits"] = r.num_qubits();
        res["success"] = trial.success;
        res["success_probability"] = std::pow(0.75, c.N);
        res["trial_probability"] = trial.probability;
        if (trial.success && c.exact) res["fidelity"] = protocol::reference_fidelity(*trial.result);
        res["circuit"] = r.session.circuit().to_json();
        write_json(c, "prepare.json", res);
        return kOk;
    }
    if (method == Method::SwapFusion) {
        // Closes a dual-memory chain into a ring with an edge SWAP test.
        if (!c.exact) throw ConfigError("swap-fusion preparation needs --exact");
        auto r = protocol::prepare_sequential(c.N, protocol::MemoryMode::Dual);
        auto pol = fusion_policy(c);
        const int rec = protocol::swap_test_fusion(r, r.mem_right, r.mem_left, pol);
        if (pol.is_forced() && pol.remaining() != 0) throw ConfigError("more forced outcomes than SWAP tests");
        res["swap_outcome"] = r.session.record(rec) == 0 ? "symmetric" : "antisymmetric";
        res["swap_probability"] = r.session.record_probability(rec);
        res["final_N"] = r.N;
        res["periodic"] = r.periodic;
        res["depth"] = r.depth();
        res["num_qubits"] = r.num_qubits();
        res["fidelity"] = sim::fidelity(protocol::prepared_state(r), mps::contract_periodic(r.chain, r.N));
        res["circuit"] = r.session.circuit().to_json();
        write_json(c, "prepare.json", res);
        return kOk;
    }
    protocol::PreparationResult r;
    auto pol = fusion_policy(c);
    if (method == Method::Sequential) {
        r = protocol::prepare_sequential(c.N, protocol::MemoryMode::Single, protocol::MemoryInit::singlet(), c.exact);
    } else if (method == Method::Fusion) {
        if (c.N < 2) throw ConfigError("fusion preparation needs N >= 2");
        r = protocol::prepare_fusion(c.N, pol, c.exact);
        protocol::correct_defects(r, mode);
        res["correction"] = protocol::correction_name(mode);
        if (pol.is_forced() && pol.remaining() != 0) throw ConfigError("more forced outcomes than fusion measurements");
    } else {
        throw ConfigError(std::string("prepare does not support method ") + protocol::method_name(method));
    }
    // Depth is quoted for the full pipeline, boundary readout included.
    protocol::enforce_boundary(r, protocol::BoundaryTarget::sample(c.seed));
    res["depth"] = r.depth();
    res["num_qubits"] = r.num_qubits();
    res["blocks"] = r.blocks.size();
    json defects = json::array();
    for (const auto &e : r.defects.entries) {
        json d{{"bond", e.bond}, {"record", e.record}};
        if (c.exact) {
            d["bell"] = sim::bell_name(e.label);
            d["defect"] = std::string(1, linalg::pauli_char(e.defect));
        }
        defects.push_back(d);
    }
    res["fusions"] = defects;
    if (c.exact) {
        if (mode == CorrectionMode::Frame && !r.defects.trivial()) {
            // A frame-mode state differs from the reference by a known Pauli
            // relabelling; report the unitary-corrected fidelity alongside.
            auto again = fusion_policy(c);
            auto u = protocol::prepare_fusion(c.N, again, true);
            protocol::correct_defects(u, CorrectionMode::Unitary);
            protocol::enforce_boundary(u, protocol::BoundaryTarget::sample(c.seed));
            res["fidelity"] = protocol::reference_fidelity(u);
        } else {
            res["fidelity"] = protocol::reference_fidelity(r);
        }
    }
    res["circuit"] = r.session.circuit().to_json();
    write_json(c, "prepare.json", res);
    std::cout << c.prep << " N=" << c.N << ": depth " << r.depth() << ", " << r.num_qubits() << " qubits\n";
    return kOk;
}

int cmd_string_order(const ExperimentConfig &c) {
    const Method method = protocol::method_from_name(c.prep);
    const auto mode = protocol::correction_from_name(c.correction);
    if (c.N < 2) throw ConfigError("string order needs N >= 2");
    std::vector<observables::StringOrderRow> rows;
    if (c.exact) {
        protocol::PreparationResult r;
        if (method == Method::Sequential) {
            r = protocol::prepare_sequential(c.N);
        } else if (method == Method::Fusion) {
            auto pol = fusion_policy(c);
            r = protocol::prepare_fusion(c.N, pol);
            protocol::correct_defects(r, mode);
        } else {
            throw ConfigError(std::string("string-order does not support method ") + protocol::method_name(method));
        }
        const auto st = protocol::prepared_state(r);
        const auto flips = observables::frame_flips(r);
        for (int ell = 2; ell <= c.N; ++ell)
            for (int i = 1; i + ell - 1 <= c.N; ++i)
                rows.push_back({c.prep, c.N, i, ell, observables::string_order(st, c.N, i, ell, flips), 0.0, 0, c.seed});
    } else {
        auto shots = noise::run_noisy(protocol::sampling_circuit(method, c.N, mode), c.noise, c.shots, c.seed);
        if (c.postselect) {
            auto kept = observables::postselect_spin1(shots);
            std::cout << "spin-1 post-selection rejected " << kept.rejection_rate << " of shots\n";
            shots = std::move(kept.shots);
        }
        if (shots.size() < 2) throw ConfigError("fewer than two shots survive post-selection");
        for (int ell = 2; ell <= c.N; ++ell)
            for (int i = 1; i + ell - 1 <= c.N; ++i) {
                const auto e = observables::string_order(shots, i, ell);
                rows.push_back({c.prep, c.N, i, ell, e.value, e.std_error, e.shots, c.seed});
            }
    }
    std::ostringstream os;
    observables::write_string_order_csv(os, rows);
    write_csv(c, "string_order.csv", os.str());
    return kOk;
}

int cmd_spectrum(const ExperimentConfig &c) {
    const Method method = protocol::method_from_name(c.prep);
    std::vector<observables::SpectrumRow> rows;
    std::vector<observables::SpectrumPoint> pts;
    json per_ell = json::array();
    for (int ell = 1; ell <= c.lmax; ++ell) {
        observables::MemorySpectrum ms;
        if (c.exact) {
            ms = observables::memory_spectrum(observables::memory_state(observables::spectrum_preparation(method, ell, c.seed + ell)));
        } else {
            const auto dry = observables::spectrum_preparation(method, ell, c.seed + ell, false);
            const std::array<int, 2> mem{dry.mem_left, dry.mem_right};
            const auto data = observables::sample_tomography(dry, mem, c.shots, c.seed + 7919 * ell, c.noise);
            ms = observables::memory_spectrum(observables::tomography(data).rho);
        }
        for (int k = 0; k < 2; ++k) rows.push_back({c.prep, ell, k, ms.conditioned_mean[static_cast<std::size_t>(k)]});
        pts.push_back({static_cast<double>(ell), ms.conditioned_mean[0], ms.conditioned_mean[1]});
        per_ell.push_back({{"l", ell}, {"rho_LR_eigenvalues", ms.joint.eigenvalues}, {"entropy_bits", ms.entropy},
                           {"p_left", ms.p_left}});
    }
    std::ostringstream os;
    observables::write_spectrum_csv(os, rows);
    write_csv(c, "spectrum.csv", os.str());
    const auto fit = observables::fit_correlation_length(pts);
    write_json(c, "spectrum_fit.json",
               {{"xi", fit.xi}, {"amplitude", fit.A}, {"residual", fit.residual}, {"xi_aklt", 1.0 / std::log(3.0)},
                {"memory_pair", per_ell}});
    std::cout << "xi = " << observables::format_number(fit.xi) << '\n';
    return kOk;
}

teleport::Target resolve_target(const ExperimentConfig &c) {
    if (c.theta) return teleport::Target::from_bloch(*c.theta, *c.phi);
    for (const auto &[name, t] : teleport::canonical_targets())
        if (name == c.target) return t;
    throw ConfigError("unknown teleportation target '" + c.target + "' (use 0, 1, +, -, +i, T or theta/phi)");
}

int cmd_teleport(const ExperimentConfig &c) {
    const teleport::Options opt{protocol::method_from_name(c.prep), protocol::correction_from_name(c.correction)};
    const auto t = resolve_target(c);
    if (c.forced_outcomes && !c.exact) throw ConfigError("forced outcomes need --exact");
    const auto rep = c.exact ? teleport::teleport(c.N, t, opt, c.seed, c.paths, c.forced_outcomes ? &*c.forced_outcomes : nullptr)
                             : teleport::teleport_shots(c.N, t, opt, c.shots, c.seed, c.noise);
    write_json(c, "teleport.json", rep.to_json());
    std::cout << "raw fidelity " << rep.raw_fidelity << ", purified " << rep.purified_fidelity << '\n';
    return kOk;
}

int cmd_variants(const ExperimentConfig &c) {
    const auto kind = variants::kind_from_name(c.variant);
    const bool simulate = c.exact || c.N <= 16;
    auto r = variants::prepare_fusion_variant(kind, c.N, fusion_policy(c), simulate);
    json res{{"kind", variants::kind_name(kind)}, {"N", c.N}, {"depth", r.depth()}, {"num_qubits", r.num_qubits()},
             {"recycled", r.recycled.size()}, {"blocks", r.blocks.size()}, {"simulated", simulate}};
    json defects = json::array();
    for (const auto &d : r.defects) {
        json e{{"bond", d.bond}, {"record", d.record}};
        if (simulate) e["defect"] = std::string(1, linalg::pauli_char(d.defect));
        defects.push_back(e);
    }
    res["fusions"] = defects;
    if (simulate) res["fidelity"] = variants::variant_fidelity(r);
    res["circuit"] = r.session.circuit().to_json();
    write_json(c, "variants.json", res);
    return kOk;
}

int cmd_noise_sweep(const ExperimentConfig &c) {
    std::ostringstream os;
    os << "method,p2,decay_length,amplitude,edge_value,edge_stderr,mitigated_edge_value,spin1_rejection,shots,seed\n";
    using observables::format_number;
    for (auto method : {Method::Sequential, Method::Fusion})
        for (double p2 : c.p2_grid) {
            NoiseModel m = c.noise;
            m.p2 = p2;
            const auto shots = noise::run_noisy(protocol::sampling_circuit(method, c.N), m, c.shots, c.seed);
            const auto fit = noise::fit_decay(noise::string_order_profile(shots));
            const auto edge = observables::string_order(shots, 1, c.N);
            const double mitigated = m.p_ro > 0.0 ? noise::mitigated_string_order(shots, 1, c.N, m.p_ro) : edge.value;
            os << protocol::method_name(method) << ',' << format_number(p2) << ',' << format_number(fit.length) << ','
               << format_number(fit.amplitude) << ',' << format_number(edge.value) << ','
               << format_number(edge.std_error) << ',' << format_number(mitigated) << ','
               << format_number(observables::postselect_spin1(shots).rejection_rate) << ',' << c.shots << ','
               << c.seed << '\n';
        }
    write_csv(c, "noise_sweep.csv", os.str());
    return kOk;
}

int cmd_selftest(const ExperimentConfig &c) {
    const std::set<int> only(c.criteria.begin(), c.criteria.end());
    for (int id : only)
        if (id < 1 || id > 12) throw ConfigError("criteria ids run from 1 to 12");
    const auto results = selftest::run(std::cout, only);
    return selftest::all_passed(results) ? kOk : kCriteriaFailed;
}

struct Flags {
    std::string config;
    std::optional<int> N;
    std::optional<std::string> prep;
    std::optional<std::size_t> shots;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> noise;
    bool exact = false;
    std::optional<std::string> forced;
    std::optional<std::string> out;
    std::optional<int> lmax;
    std::optional<std::string> correction;
    bool no_postselect = false;
    std::optional<std::string> target;
    std::optional<double> theta, phi;
    std::optional<std::size_t> paths;
    std::optional<std::string> variant;
    std::optional<std::string> p2_grid;
    std::optional<std::string> criteria;
};

void add_flags(CLI::App *sub, Flags &f) {
    sub->add_option("--config", f.config, "JSON config file (flags override its keys)");
    sub->add_option("--N", f.N, "chain length");
    sub->add_option("--prep", f.prep, "sequential, fusion or projector");
    sub->add_option("--shots", f.shots, "shots (per tomography setting where applicable)");
    sub->add_option("--seed", f.seed, "RNG seed");
    sub->add_option("--noise", f.noise, "noise model JSON file");
    sub->add_flag("--exact", f.exact, "exact statevector expectations instead of shots");
    sub->add_option("--forced-outcomes", f.forced, "comma-separated fusion outcomes (0..3)");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--lmax", f.lmax, "largest chain length of the spectrum scan");
    sub->add_option("--correction", f.correction, "none, unitary or frame");
    sub->add_flag("--no-postselect", f.no_postselect, "keep shots with encoded-singlet readouts");
    sub->add_option("--target", f.target, "teleportation target: 0, 1, +, -, +i or T");
    sub->add_option("--theta", f.theta, "teleportation target polar angle");
    sub->add_option("--phi", f.phi, "teleportation target azimuth");
    sub->add_option("--paths", f.paths, "exact-mode teleportation trajectories");
    sub->add_option("--variant", f.variant, "ghz or cluster");
    sub->add_option("--p2-grid", f.p2_grid, "comma-separated two-qubit error rates");
    sub->add_option("--criteria", f.criteria, "comma-separated acceptance criteria to run");
}

std::vector<double> parse_double_list(const std::string &s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception &) {
            throw ConfigError("'" + item + "' in list '" + s + "' is not a number");
        }
    }
    return out;
}

ExperimentConfig build_config(const std::string &command, const Flags &f) {
    ExperimentConfig c;
    c.command = command;
    if (!f.config.empty()) apply_json(c, read_json_file(f.config));
    if (f.N) c.N = *f.N;
    if (f.prep) c.prep = *f.prep;
    if (f.shots) c.shots = *f.shots;
    if (f.seed) c.seed = *f.seed;
    if (f.noise) c.noise = noise::load_model(*f.noise);
    if (f.exact) c.exact = true;
    if (f.forced) c.forced_outcomes = parse_int_list(*f.forced);
    if (f.out) c.out = *f.out;
    if (f.lmax) c.lmax = *f.lmax;
    if (f.correction) c.correction = *f.correction;
    if (f.no_postselect) c.postselect = false;
    if (f.target) c.target = *f.target;
    if (f.theta) c.theta = *f.theta;
    if (f.phi) c.phi = *f.phi;
    if (f.paths) c.paths = *f.paths;
    if (f.variant) c.variant = *f.variant;
    if (f.p2_grid) c.p2_grid = parse_double_list(*f.p2_grid);
    if (f.criteria) c.criteria = parse_int_list(*f.criteria);
    validate(c);
    return c;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{std::string("aklt-prep experiment driver ") + kVersion};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    Flags flags;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"prepare", "prepare a chain and report its depth, qubits and fusion outcomes"},
        {"string-order", "string order parameter for every span (CSV)"},
        {"spectrum", "boundary-memory spectra and correlation-length fit"},
        {"teleport", "teleport a qubit through the chain (JSON report)"},
        {"variants", "GHZ or cluster chains by fusion"},
        {"noise-sweep", "string-order decay under a sweep of two-qubit noise (CSV)"},
        {"selftest", "run the acceptance criteria"},
    };
    std::vector<CLI::App *> subs;
    for (const auto &[name, help] : commands) {
        subs.push_back(app.add_subcommand(name, help));
        add_flags(subs.back(), flags);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kInvalidConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const auto config = build_config(command, flags);
        if (command == "prepare") return cmd_prepare(config);
        if (command == "string-order") return cmd_string_order(config);
        if (command == "spectrum") return cmd_spectrum(config);
        if (command == "teleport") return cmd_teleport(config);
        if (command == "variants") return cmd_variants(config);
        if (command == "noise-sweep") return cmd_noise_sweep(config);
        return cmd_selftest(config);
    } catch (const ZeroProbabilityError &e) {
        std::cerr << "zero-probability outcome: " << e.what() << '\n';
        return kZeroProbability;
    } catch (const ConfigError &e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const DimensionError &e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}
