#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "subfp/experiments.hpp"

using namespace subfp;
namespace fs = std::filesystem;

namespace {

int print_verdicts(const RunReport& rep) {
    for (const auto& v : rep.verdicts)
        std::printf("[%s] %s: value=%.6g threshold=%.6g%s%s\n", v.pass ? "PASS" : "FAIL",
                    v.name.c_str(), v.value, v.threshold, v.note.empty() ? "" : " -- ",
                    v.note.c_str());
    std::printf("%s: %zu verdicts, %s (%.1f s)\n", rep.experiment_id.c_str(),
                rep.verdicts.size(), rep.all_pass() ? "all pass" : "FAILURES", rep.wall_seconds);
    return rep.all_pass() ? 0 : 1;
}

void write_outputs(const RunReport& rep, const ExperimentConfig& cfg) {
    const std::string dir = effective_out_dir(cfg);
    fs::create_directories(dir);
    const std::string csv = dir + "/" + rep.experiment_id + ".csv";
    write_report_csv(rep, csv);
    emit_plots(rep, dir);
    std::ofstream meta(dir + "/" + rep.experiment_id + ".meta.txt");
    meta << "experiment: " << rep.experiment_id << "\n"
         << "wall_seconds: " << rep.wall_seconds << "\n"
         << "workers: " << effective_workers(cfg) << "\n"
         << "compiler: " << __VERSION__ << "\n";
    std::printf("wrote %s\n", csv.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"subelliptic Fokker-Planck / Lindblad experiment driver"};
    app.require_subcommand(1);

    auto* verify = app.add_subcommand("verify", "run the group/kernel invariant suites");

    std::string config_path;
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", config_path, "config file (key = value lines)")->required();

    std::string report_path;
    auto* plot = app.add_subcommand("plot", "regenerate SVG plots from a report CSV");
    plot->add_option("report", report_path, "report CSV path")->required();

    auto* cache = app.add_subcommand("cache", "parametrix cache maintenance");
    cache->require_subcommand(1);
    auto* clist = cache->add_subcommand("list", "list cached parametrices");
    auto* cclear = cache->add_subcommand("clear", "remove cached parametrices");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*verify) {
            ExperimentConfig cfg;
            cfg.experiment = "kernel-verify";
            auto rep = run_experiment(cfg);
            write_outputs(rep, cfg);
            return print_verdicts(rep);
        }
        if (*run) {
            auto cfg = ExperimentConfig::parse_file(config_path);
            auto rep = run_experiment(cfg);
            write_outputs(rep, cfg);
            return print_verdicts(rep);
        }
        if (*plot) {
            std::ifstream f(report_path);
            if (!f) throw std::runtime_error("cannot open " + report_path);
            RunReport rep;
            std::string line;
            bool first = true;
            while (std::getline(f, line)) {
                std::vector<std::string> fields;
                std::stringstream ss(line);
                std::string item;
                while (std::getline(ss, item, ',')) fields.push_back(item);
                if (fields.empty()) continue;
                if (first) {
                    rep.columns = fields;
                    first = false;
                } else {
                    rep.rows.push_back(fields);
                }
            }
            rep.experiment_id = fs::path(report_path).stem().string();
            if (!rep.rows.empty() && rep.columns.size() > 0 && rep.columns[0] == "experiment_id")
                rep.experiment_id = rep.rows[0][0];
            emit_plots(rep, fs::path(report_path).parent_path().string().empty()
                                ? "."
                                : fs::path(report_path).parent_path().string());
            std::printf("plots regenerated for %s\n", rep.experiment_id.c_str());
            return 0;
        }
        if (*clist) {
            for (const auto& name : cache_list()) std::printf("%s\n", name.c_str());
            return 0;
        }
        if (*cclear) {
            cache_clear();
            std::printf("cache cleared\n");
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
