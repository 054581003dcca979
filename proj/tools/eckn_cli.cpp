#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "eckn/data.hpp"
#include "eckn/parallel.hpp"
#include "eckn/stability.hpp"
#include "eckn/verify.hpp"

namespace {

using namespace eckn;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed_override = 0;
    bool has_seed = false;
    int threads = -1;
};

RunConfig load_run_config(const GlobalOpts& opts) {
    RunConfig cfg = parse_config(opts.config_path);
    if (opts.has_seed) cfg.seed = opts.seed_override;
    if (opts.threads >= 0) cfg.threads = opts.threads;
    set_max_threads(cfg.threads);
    return cfg;
}

GroupPtr group_from(const RunConfig& cfg) { return build_group(cfg.group.kind, cfg.group.dims); }

std::vector<FeatureMap> model_inputs(const RunConfig& cfg, GroupPtr group,
                                     const std::vector<BaseImage>& images) {
    std::vector<FeatureMap> out;
    out.reserve(images.size());
    const double scale = (cfg.dataset.image_size - 1) / 2.0;
    for (const BaseImage& img : images) {
        if (cfg.group.kind == GroupKind::S2) {
            out.push_back(stereographic_project(img, group, scale));
        } else {
            out.push_back(lift(img, group));
        }
    }
    return out;
}

int cmd_fit(const GlobalOpts& opts) {
    const RunConfig cfg = load_run_config(opts);
    const Dataset ds = build_dataset(cfg);
    GroupPtr group = group_from(cfg);
    const auto inputs = model_inputs(cfg, group, ds.images);
    Network net = fit_network(cfg.network, group, inputs);
    save_network(net, cfg.network, cfg.output_dir);
    std::cout << "ok: fitted " << cfg.network.layers.size() << " layers on " << inputs.size()
              << " images; manifest in " << cfg.output_dir << "\n";
    return kExitOk;
}

int cmd_represent(const GlobalOpts& opts, const std::string& image_path,
                  const std::string& labels_path, int index, const std::string& from_dir,
                  const std::string& out_path) {
    const RunConfig cfg = load_run_config(opts);
    GroupPtr group = group_from(cfg);

    Network net;
    if (!from_dir.empty()) {
        net = load_network(from_dir, group).first;
    } else {
        const Dataset ds = build_dataset(cfg);
        net = fit_network(cfg.network, group, model_inputs(cfg, group, ds.images));
    }

    BaseImage img;
    if (image_path.empty()) {
        const Dataset ds = build_dataset(cfg);
        if (index < 0 || index >= static_cast<int>(ds.images.size()))
            throw ConfigError("image index out of range");
        img = ds.images[index];
    } else {
        if (labels_path.empty())
            throw ConfigError("represent: --labels is required with an IDX image file");
        const Dataset ds = load_idx(image_path, labels_path);
        if (index < 0 || index >= static_cast<int>(ds.images.size()))
            throw ConfigError("image index out of range");
        img = ds.images[index];
    }

    FeatureMap rep = forward(net, model_inputs(cfg, group, {img})[0]);
    if (cfg.fiber_average) rep = fiber_average(rep);
    std::string csv;
    for (std::size_t i = 0; i < rep.values.size(); ++i) {
        if (i) csv += ",";
        csv += fmt_double(rep.values[i]);
    }
    csv += "\n";
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream f(out_path);
        if (!f) throw IoError("cannot open '" + out_path + "' for writing");
        f << csv;
        std::cout << "ok: wrote " << rep.values.size() << " values to " << out_path << "\n";
    }
    return kExitOk;
}

int cmd_verify(const GlobalOpts& opts) {
    const RunConfig cfg = load_run_config(opts);
    const auto results = run_verification_suite(cfg);
    bool all = true;
    for (const CheckResult& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail << ")\n";
        all = all && r.pass;
    }
    std::cout << (all ? "ok: " : "FAILED: ") << results.size() << " checks\n";
    return all ? kExitOk : kExitInvariant;
}

int cmd_sweep(const GlobalOpts& opts) {
    const RunConfig cfg = load_run_config(opts);
    const Dataset ds = build_dataset(cfg);
    const StabilityReport rep = run_stability_sweep(cfg, ds, cfg.seed);
    const auto paths = write_reports(rep, cfg.output_dir);
    bool bounds_ok = true;
    for (const BoundCheck& bc : rep.bounds) bounds_ok = bounds_ok && bc.pass;
    std::cout << (bounds_ok ? "ok" : "BOUND-CHECK FAILURES") << ": " << rep.cells.size()
              << " cells, " << rep.bounds.size() << " bound checks; wrote " << paths.size()
              << " files to " << cfg.output_dir << "\n";
    return bounds_ok ? kExitOk : kExitInvariant;
}

int cmd_report(const std::string& dir) {
    const std::string path = (fs::path(dir) / "report.json").string();
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + path + "' is not a valid report: " + std::string(e.what()));
    }
    const StabilityReport rep = report_from_json(j);
    const auto paths = write_plotdata(rep, dir);
    std::cout << "ok: regenerated " << paths.size() << " plotdata files in " << dir << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"group-equivariant convolutional kernel networks: fitting, representation, "
                 "verification and deformation-stability sweeps"};
    app.require_subcommand(1);

    GlobalOpts opts;
    std::string image_path, labels_path, from_dir, out_path, report_dir;
    int image_index = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", opts.config_path, "run config file")->required();
        sub->add_option("--seed", opts.seed_override, "override the config seed")
            ->each([&](const std::string&) { opts.has_seed = true; });
        sub->add_option("--threads", opts.threads, "cap worker threads (0 = auto)");
    };

    CLI::App* fit = app.add_subcommand("fit", "fit the network and write its manifest");
    add_common(fit);
    CLI::App* represent =
        app.add_subcommand("represent", "emit the representation of one image as CSV");
    add_common(represent);
    represent->add_option("image", image_path, "IDX image file (omit to use the config dataset)");
    represent->add_option("--labels", labels_path, "IDX label file for the image file");
    represent->add_option("--index", image_index, "image index within the file/dataset");
    represent->add_option("--from", from_dir, "load a fitted network manifest from this directory");
    represent->add_option("--out", out_path, "write the CSV here instead of stdout");
    CLI::App* verify = app.add_subcommand("verify", "run the module invariant suites");
    add_common(verify);
    CLI::App* sweep = app.add_subcommand("sweep", "run the deformation-stability protocol");
    add_common(sweep);
    CLI::App* report =
        app.add_subcommand("report", "regenerate plotdata CSVs from an existing report.json");
    report->add_option("dir", report_dir, "report bundle directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e); // --help / --version
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (fit->parsed()) return cmd_fit(opts);
        if (represent->parsed())
            return cmd_represent(opts, image_path, labels_path, image_index, from_dir, out_path);
        if (verify->parsed()) return cmd_verify(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
        if (report->parsed()) return cmd_report(report_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvariant;
    }
    return kExitConfig;
}
