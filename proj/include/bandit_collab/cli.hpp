#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arm_models.hpp"
#include "centralized.hpp"
#include "collab_engine.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "plot.hpp"

namespace bandit_collab::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kDefaultCAlg = 64.0;

/// Every flag value the subcommands understand. Defaults live here.
struct Options {
    // instance source
    std::string instance_path;
    std::vector<double> means;
    std::vector<double> one_spike;  // n,delta

    // algorithm
    std::string variant = "basic";
    std::size_t K = 1;
    std::vector<std::uint64_t> T;
    std::size_t R = 1;
    std::vector<std::size_t> R_list;
    double delta = 0.05;
    double se_delta = 0.01;
    double c_alg = kDefaultCAlg;

    // harness
    std::uint64_t trials = 200;
    std::optional<std::uint64_t> seed;
    double confidence = 0.99;
    double target_err = 0.1;
    bool bands = false;
    bool transcript = false;
    std::uint64_t ceiling = std::uint64_t{1} << 30;
    std::string out_dir = ".";

    // signid
    double signid_delta = 0.0;

    // oracle
    std::vector<std::size_t> schedule;

    // gen
    std::string gen_kind;
    std::size_t n = 0;
    double gen_delta = 0.0;
    std::size_t best = 0;
    std::uint64_t B = 2;
    std::uint64_t L = 2;
    std::string gen_out;

    // plot
    std::string csv_path;
    std::string plot_kind;
    std::string script_out;

    // replay
    std::string metadata_path;
};

namespace detail {

inline std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string join(const std::vector<T>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_floating_point_v<T>)
            s += exact(values[i]);
        else
            s += std::to_string(values[i]);
    }
    return s;
}

inline std::uint64_t resolve_seed(const Options& o, json& meta) {
    if (o.seed) {
        meta["seed_source"] = "flag";
        return *o.seed;
    }
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    meta["seed_source"] = "entropy";
    return seed;
}

inline Instance resolve_instance(const Options& o) {
    const int sources = !o.instance_path.empty() + !o.means.empty() + !o.one_spike.empty();
    if (sources != 1) throw usage_error("give exactly one of --instance, --means, --one-spike");
    if (!o.instance_path.empty()) return load_instance(o.instance_path);
    if (!o.means.empty()) return Instance::from_means(o.means);
    if (o.one_spike.size() != 2) throw usage_error("--one-spike expects n,delta");
    if (!(o.one_spike[0] >= 2.0) || std::floor(o.one_spike[0]) != o.one_spike[0])
        throw usage_error("--one-spike: n must be an integer >= 2");
    return one_spike(static_cast<std::size_t>(o.one_spike[0]), o.one_spike[1]);
}

/// Default horizon c_alg * H * ln(H K) / K^{(R-1)/R}.
inline std::uint64_t calibrated_horizon(const Instance& instance, std::size_t K, std::size_t R, double c_alg) {
    const double H = hardness(instance);
    if (H <= 0.0) return 1;
    const double k = static_cast<double>(K);
    const double r = static_cast<double>(R);
    const double T = c_alg * H * std::log(std::max(H * k, 2.0)) / std::pow(k, (r - 1.0) / r);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(T)));
}

inline std::filesystem::path prepare_out_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec || !std::filesystem::is_directory(p)) throw std::runtime_error("--out: cannot create directory " + dir);
    return p;
}

inline void write_metadata(const std::filesystem::path& dir, json meta) {
    json hashed;
    hashed["command"] = meta["command"];
    hashed["config"] = meta["config"];
    if (meta.contains("instance")) hashed["instance"] = meta["instance"];
    meta["config_hash"] = git_blob_hash(hashed.dump());
    write_file((dir / "metadata.json").string(), meta.dump(2) + "\n");
}

inline json base_metadata(const std::string& command) {
    json meta;
    meta["tool"] = "bandit_collab";
    meta["version"] = kVersion;
    meta["command"] = command;
    return meta;
}

// ---------------------------------------------------------------------------

inline int cmd_run(const Options& o, std::ostream& out) {
    const Instance instance = resolve_instance(o);
    json meta = base_metadata("run");
    const std::uint64_t seed = resolve_seed(o, meta);
    const AlgoKind kind = parse_algo_kind(o.variant);

    std::vector<std::uint64_t> horizons = o.T;
    bool calibrated = false;
    if (horizons.empty()) {
        horizons.push_back(calibrated_horizon(instance, o.K, o.R, o.c_alg));
        calibrated = true;
    }

    const auto dir = prepare_out_dir(o.out_dir);
    EstimateOptions eo;
    eo.confidence = o.confidence;
    std::vector<ErrorsRow> rows;
    for (std::uint64_t T : horizons) {
        AlgoConfig a;
        a.kind = kind;
        a.K = o.K;
        a.T = T;
        a.R = o.R;
        a.delta = o.delta;
        a.se_delta = o.se_delta;
        rows.push_back({o.variant, o.K, T, o.R, estimate_error(a, instance, o.trials, seed, eo), seed});
    }
    write_file((dir / "errors.csv").string(), errors_csv(rows));

    if (o.transcript && kind != AlgoKind::SuccessiveElimination && kind != AlgoKind::SuccessiveRejects) {
        AlgoConfig a;
        a.kind = kind;
        a.K = o.K;
        a.T = horizons.front();
        a.R = o.R;
        a.se_delta = o.se_delta;
        CollabConfig c = to_collab(a);
        c.retain_transcript = true;
        const Outcome first = run_collab(instance, c, SeededRng(seed, 0));
        std::ostringstream jsonl;
        write_transcript_jsonl(jsonl, *first.transcript);
        write_file((dir / "transcript.jsonl").string(), jsonl.str());
    }

    std::vector<std::string> args = {"run",     "--means",  join(std::vector<double>(instance.means().begin(),
                                                                                      instance.means().end())),
                                     "--variant", o.variant, "--K", std::to_string(o.K), "--T", join(horizons),
                                     "--R",       std::to_string(o.R), "--trials", std::to_string(o.trials),
                                     "--seed",    std::to_string(seed), "--delta", exact(o.delta), "--se-delta",
                                     exact(o.se_delta), "--confidence", exact(o.confidence)};
    if (o.transcript) args.emplace_back("--transcript");

    meta["seed"] = seed;
    meta["instance"] = instance_to_json(instance);
    meta["config"] = {{"variant", o.variant},   {"K", o.K},         {"T", horizons},
                      {"R", o.R},               {"trials", o.trials}, {"delta", o.delta},
                      {"se_delta", o.se_delta}, {"confidence", o.confidence}};
    if (calibrated) meta["config"]["c_alg"] = o.c_alg;
    meta["replay_args"] = args;
    meta["outputs"] = o.transcript ? json{"errors.csv", "transcript.jsonl"} : json{"errors.csv"};
    meta["failure_rule"] = "any answer other than the best arm, abstain included";
    write_metadata(dir, meta);

    for (const auto& r : rows)
        out << o.variant << " T=" << r.T << " rate=" << format_real(r.estimate.rate) << " ["
            << format_real(r.estimate.ci_low) << ", " << format_real(r.estimate.ci_high) << "]\n";
    return 0;
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
    const Instance instance = resolve_instance(o);
    if (o.R_list.empty()) throw usage_error("--R: give at least one round count");
    if (!(o.target_err > 0.0 && o.target_err < 1.0)) throw usage_error("--target-err must lie in (0,1)");
    json meta = base_metadata("sweep");
    const std::uint64_t seed = resolve_seed(o, meta);
    const auto dir = prepare_out_dir(o.out_dir);

    SpeedupOptions so;
    so.bands = o.bands;
    so.ceiling = o.ceiling;
    so.se_delta = o.se_delta;
    so.estimate.confidence = o.confidence;
    const auto rows = speedup_table(instance, o.K, o.R_list, o.target_err, o.trials, seed, so);
    write_file((dir / "speedup.csv").string(), speedup_csv(rows, o.K, o.target_err, seed));

    std::vector<std::string> args = {
        "sweep",  "--means", join(std::vector<double>(instance.means().begin(), instance.means().end())),
        "--K",    std::to_string(o.K), "--R", join(o.R_list), "--target-err", exact(o.target_err),
        "--trials", std::to_string(o.trials), "--seed", std::to_string(seed), "--se-delta", exact(o.se_delta),
        "--confidence", exact(o.confidence), "--ceiling", std::to_string(o.ceiling)};
    if (o.bands) args.emplace_back("--bands");

    meta["seed"] = seed;
    meta["instance"] = instance_to_json(instance);
    meta["config"] = {{"K", o.K},           {"R", o.R_list},         {"target_err", o.target_err},
                      {"trials", o.trials}, {"se_delta", o.se_delta}, {"confidence", o.confidence},
                      {"ceiling", o.ceiling}, {"bands", o.bands}};
    meta["replay_args"] = args;
    meta["outputs"] = json{"speedup.csv"};
    meta["speedup_definition"] =
        "baseline_T / T_star at a common target error; baseline is successive rejects; T_star is the smallest "
        "horizon of the R-round collaborative algorithm meeting the target on this single instance. R = 1 runs "
        "the baseline on one agent. This approximates, and does not compute, a worst-case dominance speedup.";
    json bands = json::array();
    for (const auto& r : rows)
        bands.push_back({{"R", r.R}, {"speedup", r.empirical_speedup}, {"low", r.speedup_low}, {"high", r.speedup_high}});
    meta["speedup_bands"] = bands;
    write_metadata(dir, meta);

    for (const auto& r : rows)
        out << "R=" << r.R << " T*=" << r.T_star << " baseline=" << r.baseline_T
            << " speedup=" << format_real(r.empirical_speedup) << "\n";
    return 0;
}

inline int cmd_signid(const Options& o, std::ostream& out) {
    if (o.signid_delta == 0.0) throw usage_error("--delta must be non-zero");
    if (o.T.empty()) throw usage_error("--T: give at least one horizon");
    json meta = base_metadata("signid");
    const std::uint64_t seed = resolve_seed(o, meta);
    const auto dir = prepare_out_dir(o.out_dir);
    const AlgoKind kind = parse_algo_kind(o.variant);
    const Variant variant = to_collab(AlgoConfig{kind}).variant;
    EstimateOptions eo;
    eo.confidence = o.confidence;

    std::vector<ErrorsRow> rows;
    for (std::uint64_t T : o.T)
        rows.push_back({std::string("signid-") + o.variant, o.K, T, o.R,
                        signid_run(o.signid_delta, o.K, T, o.R, o.trials, seed, variant, eo), seed});
    write_file((dir / "errors.csv").string(), errors_csv(rows));

    meta["seed"] = seed;
    meta["instance"] = instance_to_json(signid_reduction_instance(o.signid_delta));
    meta["config"] = {{"delta", o.signid_delta}, {"variant", o.variant}, {"K", o.K}, {"T", o.T},
                      {"R", o.R},                {"trials", o.trials},  {"confidence", o.confidence}};
    meta["replay_args"] = std::vector<std::string>{
        "signid", "--delta", exact(o.signid_delta), "--variant", o.variant, "--K", std::to_string(o.K), "--T",
        join(o.T), "--R", std::to_string(o.R), "--trials", std::to_string(o.trials), "--seed", std::to_string(seed),
        "--confidence", exact(o.confidence)};
    meta["outputs"] = json{"errors.csv"};
    meta["sign_rule"] = "unknown arm (1) returned -> '>0', reference arm (0) -> '<0', abstain -> failure";
    write_metadata(dir, meta);

    for (const auto& r : rows) out << "signid T=" << r.T << " error=" << format_real(r.estimate.rate) << "\n";
    return 0;
}

inline int cmd_oracle(const Options& o, std::ostream& out) {
    const Instance instance = Instance::from_means(o.means);
    const FixedSchedulePolicy policy{o.schedule};
    const double exact_error = exact_error_oracle(instance, policy);
    json meta = base_metadata("oracle");
    const std::uint64_t seed = resolve_seed(o, meta);
    const auto dir = prepare_out_dir(o.out_dir);

    const std::uint64_t failures = count_failures(o.trials, seed, [&](const SeededRng& rng) {
        SeededRng r = rng;
        return run_fixed_schedule(instance, policy, r) != instance.best();
    });
    const ErrorEstimate mc = make_estimate(o.trials, failures, o.confidence);

    meta["seed"] = seed;
    meta["instance"] = instance_to_json(instance);
    meta["config"] = {{"schedule", o.schedule}, {"trials", o.trials}, {"confidence", o.confidence}};
    meta["replay_args"] = std::vector<std::string>{
        "oracle", "--means", join(o.means), "--schedule", join(o.schedule), "--trials", std::to_string(o.trials),
        "--seed", std::to_string(seed), "--confidence", exact(o.confidence)};
    meta["exact_error"] = exact_error;
    meta["monte_carlo"] = {{"trials", mc.trials}, {"failures", mc.failures}, {"rate", mc.rate},
                           {"ci_low", mc.ci_low}, {"ci_high", mc.ci_high}};
    meta["outputs"] = json::array();
    write_metadata(dir, meta);

    out << "exact=" << format_real(exact_error) << " monte_carlo=" << format_real(mc.rate) << " ["
        << format_real(mc.ci_low) << ", " << format_real(mc.ci_high) << "]\n";
    return 0;
}

inline int cmd_gen(const Options& o, std::ostream& out) {
    Instance instance = [&] {
        if (o.gen_kind == "one-spike") return one_spike(o.n, o.gen_delta, o.best);
        if (o.gen_kind == "signid") return signid_instance(o.gen_delta);
        if (o.gen_kind == "custom") return Instance::from_means(o.means);
        if (o.gen_kind == "pyramid") {
            if (!o.seed) throw usage_error("--seed is required for pyramid");
            SeededRng rng(*o.seed);
            return pyramid(PyramidParams{o.B, o.L, o.n}, rng);
        }
        throw usage_error("unknown generator '" + o.gen_kind + "'");
    }();
    const std::string text = instance_to_json(instance).dump() + "\n";
    if (o.gen_out.empty())
        out << text;
    else
        write_file(o.gen_out, text);
    return 0;
}

inline int cmd_plot(const Options& o, std::ostream& out) {
    const std::string target = o.script_out.empty() ? o.csv_path + ".plot.py" : o.script_out;
    emit_plot_script(o.csv_path, parse_plot_kind(o.plot_kind), target);
    out << target << "\n";
    return 0;
}

}  // namespace detail

inline int parse_and_dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err);

namespace detail {

inline int cmd_replay(const Options& o, std::ostream& out, std::ostream& err) {
    json meta;
    try {
        meta = json::parse(read_file(o.metadata_path));
    } catch (const json::parse_error& e) {
        throw usage_error("--metadata: " + std::string(e.what()));
    }
    if (!meta.contains("replay_args") || !meta["replay_args"].is_array())
        throw usage_error("--metadata: no replay_args in " + o.metadata_path);
    std::vector<std::string> args = meta["replay_args"].get<std::vector<std::string>>();
    args.emplace_back("--out");
    args.push_back(o.out_dir);
    return parse_and_dispatch(std::move(args), out, err);
}

}  // namespace detail

/// Entry point shared by the tool and the tests. `args` excludes the program
/// name. Exit codes: 0 success, 2 usage error, 1 runtime failure.
inline int parse_and_dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Collaborative best-arm identification simulator", "bandit_collab"};
    app.set_config("--config", "", "Flat key = value config file; flags override it");
    app.require_subcommand(1);
    bool show_config = false;
    app.add_flag("--show-config", show_config, "Print the resolved configuration (defaults included) and exit");
    app.set_version_flag("--version", kVersion);

    std::uint64_t seed_value = 0;
    auto add_instance = [&](CLI::App* sub) {
        sub->add_option("--instance", o.instance_path, "Instance JSON file");
        sub->add_option("--means", o.means, "Inline arm means")->delimiter(',');
        sub->add_option("--one-spike", o.one_spike, "Generated one-spike instance: n,delta")->delimiter(',');
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--trials", o.trials, "Monte-Carlo trials")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed_value, "Master seed (default: drawn from entropy and recorded)");
        sub->add_option("--confidence", o.confidence, "Hoeffding CI confidence")
            ->capture_default_str()
            ->check(CLI::Range(0.5, 0.999999));
        sub->add_option("-o,--out", o.out_dir, "Output directory")->capture_default_str();
    };

    auto* run = app.add_subcommand("run", "Estimate the error of one algorithm at one or more horizons");
    add_instance(run);
    add_common(run);
    run->add_option("--variant", o.variant, "basic | improved | random-threshold | meta | se | sr")
        ->capture_default_str();
    run->add_option("--K", o.K, "Agents")->capture_default_str()->check(CLI::PositiveNumber);
    run->add_option("--T", o.T, "Horizon(s); default c_alg*H*ln(HK)/K^((R-1)/R)")->delimiter(',')->check(
        CLI::PositiveNumber);
    run->add_option("--R", o.R, "Communication steps (rounds for 'improved')")->capture_default_str()->check(
        CLI::PositiveNumber);
    run->add_option("--delta", o.delta, "Confidence for the se variant")->capture_default_str();
    run->add_option("--se-delta", o.se_delta, "Preparation SE confidence")->capture_default_str();
    run->add_option("--c-alg", o.c_alg, "Leading constant for the default horizon")->capture_default_str();
    run->add_flag("--transcript", o.transcript, "Write transcript.jsonl for trial 0 of the first horizon");

    auto* sweep = app.add_subcommand("sweep", "Speedup table over round counts");
    add_instance(sweep);
    add_common(sweep);
    sweep->add_option("--K", o.K, "Agents")->capture_default_str()->check(CLI::PositiveNumber);
    sweep->add_option("--R", o.R_list, "Round counts, e.g. 1,2,3")->delimiter(',')->check(CLI::PositiveNumber);
    sweep->add_option("--target-err", o.target_err, "Target error")->capture_default_str();
    sweep->add_option("--se-delta", o.se_delta, "Preparation SE confidence")->capture_default_str();
    sweep->add_option("--ceiling", o.ceiling, "Largest horizon tried")->capture_default_str();
    sweep->add_flag("--bands", o.bands, "Also run optimistic/pessimistic searches for speedup bands");

    auto* signid = app.add_subcommand("signid", "Sign identification through the two-arm reduction");
    add_common(signid);
    signid->add_option("--delta", o.signid_delta, "Unknown arm mean minus 1/2")->required();
    signid->add_option("--variant", o.variant, "Collaborative variant")->capture_default_str();
    signid->add_option("--K", o.K, "Agents")->capture_default_str()->check(CLI::PositiveNumber);
    signid->add_option("--T", o.T, "Horizon(s)")->delimiter(',')->required()->check(CLI::PositiveNumber);
    signid->add_option("--R", o.R, "Communication steps")->capture_default_str()->check(CLI::PositiveNumber);

    auto* oracle = app.add_subcommand("oracle", "Exact vs Monte-Carlo error of a fixed two-arm schedule");
    add_common(oracle);
    oracle->add_option("--means", o.means, "Two arm means")->delimiter(',')->required();
    oracle->add_option("--schedule", o.schedule, "Arm pulled at each step, e.g. 0,0,1,1")->delimiter(',')->required();

    auto* gen = app.add_subcommand("gen", "Generate an instance JSON");
    gen->add_option("kind", o.gen_kind, "one-spike | pyramid | signid | custom")->required();
    gen->add_option("--n", o.n, "Number of arms");
    gen->add_option("--delta", o.gen_delta, "Gap (one-spike) or offset (signid)");
    gen->add_option("--best", o.best, "Best-arm index (one-spike)")->capture_default_str();
    gen->add_option("--B", o.B, "Pyramid level ratio")->capture_default_str();
    gen->add_option("--L", o.L, "Pyramid levels")->capture_default_str();
    gen->add_option("--means", o.means, "Means (custom)")->delimiter(',');
    gen->add_option("--seed", seed_value, "Seed (pyramid)");
    gen->add_option("-o,--out", o.gen_out, "Output file (default stdout)");

    auto* plot = app.add_subcommand("plot", "Write a matplotlib script for speedup.csv or errors.csv");
    plot->add_option("--csv", o.csv_path, "Input CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--kind", o.plot_kind, "speedup | errors")->required();
    plot->add_option("-o,--out", o.script_out, "Script path (default <csv>.plot.py)");

    auto* replay = app.add_subcommand("replay", "Re-run a recorded run from its metadata.json");
    replay->add_option("--metadata", o.metadata_path, "metadata.json of the run")->required()->check(
        CLI::ExistingFile);
    replay->add_option("-o,--out", o.out_dir, "Output directory")->required();

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    if (show_config) {
        out << app.config_to_str(true, true);
        return 0;
    }

    for (auto* sub : {run, sweep, signid, oracle, gen})
        if (sub->parsed() && sub->count("--seed") > 0) o.seed = seed_value;

    try {
        if (run->parsed()) return detail::cmd_run(o, out);
        if (sweep->parsed()) return detail::cmd_sweep(o, out);
        if (signid->parsed()) return detail::cmd_signid(o, out);
        if (oracle->parsed()) return detail::cmd_oracle(o, out);
        if (gen->parsed()) return detail::cmd_gen(o, out);
        if (plot->parsed()) return detail::cmd_plot(o, out);
        if (replay->parsed()) return detail::cmd_replay(o, out, err);
    } catch (const usage_error& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return parse_and_dispatch(std::move(args), out, err);
}

}  // namespace bandit_collab::cli
