#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "evs/evs.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw evs::ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw evs::Error("cannot write " + path);
    out << content;
}

void emit(const evs::Json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
}

evs::ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed) {
    evs::ExperimentConfig cfg;
    try {
        cfg = evs::parse_config(read_file(path));
    } catch (const evs::ConfigError& e) {
        throw evs::ConfigError(path + ": " + e.what());
    }
    if (seed) cfg.seed = *seed;
    return cfg;
}

int run_check(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out, unsigned workers) {
    const auto cfg = load(path, seed);
    if (cfg.kind == evs::ExperimentKind::Counterexample) {
        evs::Json j = evs::Json::array();
        for (const auto& v : evs::run_counterexample(cfg.tol)) j.push_back(evs::to_json(v));
        emit(j, out);
        return evs::exit_code::evs;
    }
    const auto result = evs::run_evs_check(cfg, workers);
    emit(evs::to_json(result, cfg), out);
    std::cerr << "verdict: " << evs::to_string(result.report.verdict)
              << (result.report.indeterminate ? " (statistically indeterminate)" : "") << "\n";
    return evs::exit_code_for(result.report);
}

int run_sweep(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out, unsigned workers) {
    const auto cfg = load(path, seed);
    const auto result = evs::run_sweep(cfg, workers);
    const std::string csv = evs::to_csv(result);
    if (out.empty()) {
        std::cout << csv;
        std::cerr << result.metadata.dump(2) << "\n";
    } else {
        write_file(out, csv);
        write_file(out + ".meta.json", result.metadata.dump(2) + "\n");
    }
    for (const auto& v : result.monotonicity_violations) std::cerr << "monotonicity check failed: " << v << "\n";
    return result.monotonicity_violations.empty() ? 0 : evs::exit_code::monotonicity;
}

int run_counterexample(const std::string& out) {
    const auto variants = evs::run_counterexample();
    evs::Json j = evs::Json::array();
    for (const auto& v : variants) j.push_back(evs::to_json(v));
    emit(j, out);
    const auto& closed = variants.front();
    const bool reproduced = closed.failing_evs_conditions() == 6 && closed.unit_tuple.member &&
                            closed.axioms[0].passes() && closed.axioms[1].passes() && closed.axioms[2].passes();
    std::cerr << (reproduced ? "counterexample reproduced: all six strict conditions fail, (1,1,1) is in the "
                               "intersection\n"
                             : "counterexample NOT reproduced\n");
    return reproduced ? 0 : 1;
}

int run_symmetric(int k, double asq, std::optional<double> pbar) {
    evs::Json j;
    j["k_users"] = k;
    j["cross_gain_sq"] = asq;
    j["cmac_pbar_max"] = evs::cmac_max_power(k, asq);
    j["cmac_pbar_supremum"] = evs::number_or_null(evs::cmac_power_supremum(k));
    const auto w = evs::lattice_power_window(asq);
    j["lattice_window"] = w ? evs::Json{{"lower", w->lower}, {"upper", w->upper}} : evs::Json(nullptr);
    int code = 0;
    if (pbar) {
        const evs::SymmetricIfc ifc{k, asq, *pbar};
        const auto min_gain = evs::cmac_min_gain(k, *pbar);
        j["pbar"] = *pbar;
        j["cmac_min_gain"] = min_gain ? evs::Json(*min_gain) : evs::Json("infeasible");
        j["cmac_very_strong"] = evs::cmac_very_strong(ifc);
        j["lattice_very_strong"] = evs::lattice_very_strong(ifc);
        const auto batch = evs::sample_batch(evs::symmetric_to_channel_model(ifc), 1, 0);
        const auto res = evs::evaluate_channel(batch, std::vector<double>(k, *pbar), 1e-9);
        j["verdict"] = evs::to_string(res.report.verdict);
        j["report"] = evs::to_json(res.report);
        code = evs::exit_code_for(res.report);
    }
    std::cout << j.dump(2) << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ergodic very strong interference channel checker"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;

    auto* check = app.add_subcommand("check", "Run the EVS pipeline on one channel config");
    check->add_option("config", config_path, "Experiment config (JSON)")->required();
    check->add_option("--seed", seed, "Override the config seed");
    check->add_option("-o,--output", out_path, "Write the JSON report here instead of stdout");
    check->add_option("--workers", workers, "Worker threads (results do not depend on this)");

    auto* sweep = app.add_subcommand("sweep", "Run a figure or budget sweep and write CSV");
    sweep->add_option("config", config_path, "Experiment config (JSON)")->required();
    sweep->add_option("--seed", seed, "Override the config seed");
    sweep->add_option("-o,--output", out_path, "CSV path; metadata goes to <path>.meta.json");
    sweep->add_option("--workers", workers, "Worker threads (results do not depend on this)");

    auto* counter = app.add_subcommand("counterexample", "Evaluate the built-in three-user counterexample");
    counter->add_option("-o,--output", out_path, "Write the JSON report here instead of stdout");

    int k = 3;
    double asq = 0.0;
    std::optional<double> pbar;
    auto* sym = app.add_subcommand("symmetric", "Closed-form thresholds for the symmetric non-fading IFC");
    sym->add_option("--k", k, "Number of users")->required()->check(CLI::Range(2, evs::max_users));
    sym->add_option("--asq", asq, "Cross-link power gain a^2")->required()->check(CLI::PositiveNumber);
    sym->add_option("--pbar", pbar, "Common power budget to test")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : evs::exit_code::config;
    }

    try {
        if (check->parsed()) return run_check(config_path, seed, out_path, workers);
        if (sweep->parsed()) return run_sweep(config_path, seed, out_path, workers);
        if (counter->parsed()) return run_counterexample(out_path);
        if (sym->parsed()) return run_symmetric(k, asq, pbar);
    } catch (const evs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return evs::exit_code::config;
    } catch (const evs::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return evs::exit_code::config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
