#include "eckn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "eckn/rng.hpp"

namespace eckn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint32_t read_be32(std::ifstream& f, const std::string& path) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw IoError("'" + path + "' truncated");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_be32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<char*>(b), 4);
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) throw IoError("cannot open '" + images_path + "'");
    if (read_be32(fi, images_path) != 0x00000803u)
        throw IoError("'" + images_path + "': bad magic, expected an IDX image file (0x803)");
    const std::uint32_t count = read_be32(fi, images_path);
    const std::uint32_t rows = read_be32(fi, images_path);
    const std::uint32_t cols = read_be32(fi, images_path);

    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) throw IoError("cannot open '" + labels_path + "'");
    if (read_be32(fl, labels_path) != 0x00000801u)
        throw IoError("'" + labels_path + "': bad magic, expected an IDX label file (0x801)");
    const std::uint32_t lcount = read_be32(fl, labels_path);
    if (lcount != count)
        throw IoError("IDX count mismatch: " + std::to_string(count) + " images vs " +
                      std::to_string(lcount) + " labels");

    Dataset ds;
    ds.provenance = images_path;
    std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < count; ++i) {
        fi.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!fi) throw IoError("'" + images_path + "' truncated at image " + std::to_string(i));
        BaseImage img = make_image(static_cast<int>(rows), static_cast<int>(cols));
        for (std::size_t j = 0; j < buf.size(); ++j) img.pixels[j] = buf[j] / 255.0;
        ds.images.push_back(std::move(img));
        unsigned char lab;
        fl.read(reinterpret_cast<char*>(&lab), 1);
        if (!fl) throw IoError("'" + labels_path + "' truncated at label " + std::to_string(i));
        ds.labels.push_back(lab);
    }
    return ds;
}

void save_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path) {
    if (ds.images.empty()) throw ShapeError("save_idx: empty dataset");
    std::ofstream fi(images_path, std::ios::binary);
    if (!fi) throw IoError("cannot open '" + images_path + "' for writing");
    write_be32(fi, 0x00000803u);
    write_be32(fi, static_cast<std::uint32_t>(ds.images.size()));
    write_be32(fi, static_cast<std::uint32_t>(ds.images[0].height));
    write_be32(fi, static_cast<std::uint32_t>(ds.images[0].width));
    for (const BaseImage& img : ds.images) {
        for (double p : img.pixels) {
            const unsigned char b = static_cast<unsigned char>(std::llround(p * 255.0));
            fi.write(reinterpret_cast<const char*>(&b), 1);
        }
    }
    std::ofstream fl(labels_path, std::ios::binary);
    if (!fl) throw IoError("cannot open '" + labels_path + "' for writing");
    write_be32(fl, 0x00000801u);
    write_be32(fl, static_cast<std::uint32_t>(ds.labels.size()));
    for (int lab : ds.labels) {
        const unsigned char b = static_cast<unsigned char>(lab);
        fl.write(reinterpret_cast<const char*>(&b), 1);
    }
}

BaseImage rotate_image(const BaseImage& img, double angle) {
    BaseImage out = make_image(img.height, img.width, img.channels);
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;
    const double c = std::cos(-angle), s = std::sin(-angle);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double sx = cx + c * dx - s * dy;
            const double sy = cy + s * dx + c * dy;
            if (sx < -0.5 || sx > img.width - 0.5 || sy < -0.5 || sy > img.height - 0.5) continue;
            int x0 = static_cast<int>(std::floor(sx));
            int y0 = static_cast<int>(std::floor(sy));
            double wx = sx - x0, wy = sy - y0;
            // snap so quarter-turn rotations are exact permutations
            if (wx < 1e-9) wx = 0.0;
            if (wx > 1.0 - 1e-9) {
                wx = 0.0;
                ++x0;
            }
            if (wy < 1e-9) wy = 0.0;
            if (wy > 1.0 - 1e-9) {
                wy = 0.0;
                ++y0;
            }
            auto px = [&](int yy, int xx, int ch) -> double {
                if (xx < 0 || xx >= img.width || yy < 0 || yy >= img.height) return 0.0;
                return img.at(yy, xx, ch);
            };
            for (int ch = 0; ch < img.channels; ++ch) {
                out.at(y, x, ch) = (1.0 - wx) * (1.0 - wy) * px(y0, x0, ch) +
                                   wx * (1.0 - wy) * px(y0, x0 + 1, ch) +
                                   (1.0 - wx) * wy * px(y0 + 1, x0, ch) +
                                   wx * wy * px(y0 + 1, x0 + 1, ch);
            }
        }
    return out;
}

Dataset make_rotated(const Dataset& ds, std::uint64_t seed) {
    Dataset out;
    out.provenance = ds.provenance + "+rotated";
    out.split = ds.split;
    out.labels = ds.labels;
    out.images.reserve(ds.images.size());
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        Rng rng(derive_seed(seed, i));
        out.images.push_back(rotate_image(ds.images[i], rng.uniform(0.0, kTwoPi)));
    }
    return out;
}

Dataset make_synthetic(int n_per_class, int dims, std::uint64_t seed) {
    if (n_per_class <= 0 || dims <= 0)
        throw ShapeError("make_synthetic: counts and dims must be positive");
    Dataset ds;
    ds.provenance = "synthetic";
    const double scale = dims / 16.0;
    for (int cls = 0; cls < 10; ++cls) {
        const double orient = cls * std::numbers::pi / 10.0;
        for (int i = 0; i < n_per_class; ++i) {
            Rng rng(derive_seed(seed, cls, i));
            const double jx = rng.uniform(-1.0, 1.0) * scale;
            const double jy = rng.uniform(-1.0, 1.0) * scale;
            const double bw = rng.uniform(1.1, 1.6) * scale; // bar half-width
            const double bl = rng.uniform(3.0, 4.5) * scale; // bar half-length
            const double cx = (dims - 1) / 2.0 + jx;
            const double cy = (dims - 1) / 2.0 + jy;
            const double co = std::cos(orient), so = std::sin(orient);
            BaseImage img = make_image(dims, dims);
            for (int y = 0; y < dims; ++y)
                for (int x = 0; x < dims; ++x) {
                    const double dx = x - cx, dy = y - cy;
                    const double along = co * dx + so * dy;
                    const double across = -so * dx + co * dy;
                    const double v = std::exp(-0.5 * (across * across) / (bw * bw)) *
                                     std::exp(-0.5 * (along * along) / (bl * bl));
                    img.at(y, x) = std::clamp(v, 0.0, 1.0);
                }
            ds.images.push_back(std::move(img));
            ds.labels.push_back(cls);
        }
    }
    return ds;
}

ProtocolSets build_protocol_sets(const Dataset& ds, const std::vector<double>& alphas,
                                 const TauParams& tau_params, std::uint64_t seed,
                                 bool rotation_augment, int refs_per_class, int n_classes,
                                 int mixed_pool) {
    if (alphas.empty()) throw ShapeError("build_protocol_sets: empty alpha list");
    ProtocolSets ps;
    ps.seed = seed;
    ps.alphas = alphas;
    const int na = static_cast<int>(alphas.size());

    // per-class index lists
    std::vector<std::vector<int>> by_class(n_classes);
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        if (ds.labels[i] >= 0 && ds.labels[i] < n_classes)
            by_class[ds.labels[i]].push_back(static_cast<int>(i));
    }
    for (int c = 0; c < n_classes; ++c)
        if (static_cast<int>(by_class[c].size()) < refs_per_class)
            throw ConfigError("build_protocol_sets: class " + std::to_string(c) + " has only " +
                              std::to_string(by_class[c].size()) + " images, need " +
                              std::to_string(refs_per_class));

    // references: seeded draw without replacement per class
    for (int c = 0; c < n_classes; ++c) {
        Rng rng(derive_seed(seed, 0x5e1ec7, c));
        std::vector<int> pool = by_class[c];
        for (int k = 0; k < refs_per_class; ++k) {
            const std::size_t j = k + rng.uniform_index(pool.size() - k);
            std::swap(pool[k], pool[j]);
            ps.references.push_back(ds.images[pool[k]]);
            ps.reference_labels.push_back(c);
        }
    }

    const int n_refs = static_cast<int>(ps.references.size());
    const int h = ps.references[0].height, w = ps.references[0].width;
    ps.deformed.reserve(static_cast<std::size_t>(n_refs) * na);
    for (int r = 0; r < n_refs; ++r) {
        ps.taus.push_back(generate_tau(GroupKind::SE2, h, w, tau_params.smoothness,
                                       tau_params.target_grad, derive_seed(seed, 0x7a0, r)));
        double angle = 0.0;
        if (rotation_augment) {
            Rng rng(derive_seed(seed, 0xa06, r));
            angle = rng.uniform(0.0, kTwoPi);
        }
        ps.augment_angles.push_back(angle);
        for (int a = 0; a < na; ++a) {
            BaseImage d = deform_image(ps.references[r], ps.taus[r], alphas[a]);
            if (angle != 0.0) d = rotate_image(d, angle);
            ps.deformed.push_back(std::move(d));
        }
    }

    // same-class pools: all deformed copies sharing the reference's label
    ps.same_class.resize(n_refs);
    for (int r = 0; r < n_refs; ++r)
        for (int r2 = 0; r2 < n_refs; ++r2)
            if (ps.reference_labels[r2] == ps.reference_labels[r])
                for (int a = 0; a < na; ++a) ps.same_class[r].push_back(r2 * na + a);

    // mixed pools: per reference, drawn without replacement, stratified by alpha
    ps.mixed.resize(n_refs);
    const int per_alpha = std::max(1, mixed_pool / na);
    for (int r = 0; r < n_refs; ++r) {
        for (int a = 0; a < na; ++a) {
            Rng rng(derive_seed(seed, 0x319ed ^ (static_cast<std::uint64_t>(r) << 8), a));
            std::vector<int> cand;
            for (int r2 = 0; r2 < n_refs; ++r2) cand.push_back(r2 * na + a);
            const int take = std::min(per_alpha, static_cast<int>(cand.size()));
            for (int k = 0; k < take; ++k) {
                const std::size_t j = k + rng.uniform_index(cand.size() - k);
                std::swap(cand[k], cand[j]);
                ps.mixed[r].push_back(cand[k]);
            }
        }
    }
    return ps;
}

namespace {

const std::set<std::string>& allowed_keys(const std::string& section) {
    static const std::set<std::string> run = {"seed", "output_dir", "threads"};
    static const std::set<std::string> group = {"kind",   "height", "width",  "n_theta",
                                                "n_beta", "n_phi",  "n_alpha", "n_gamma"};
    static const std::set<std::string> dataset = {"source", "n_per_class", "image_size",
                                                  "rotate", "images",      "labels"};
    static const std::set<std::string> network = {"n_layers", "sigma0", "n_fit_patches",
                                                  "fiber_average"};
    static const std::set<std::string> layer = {"kernel", "alpha",  "degree", "offset",
                                                "p",      "kappa",  "sigma",  "eps",
                                                "seed",   "fiber_offsets", "bandwidth"};
    static const std::set<std::string> sweep = {
        "alphas",        "kappas",     "sigmas",           "rbf_bandwidths",
        "alpha_kernels", "default_kappa", "default_sigma", "tau_smoothness",
        "tau_target_grad", "rotation_augment", "mixed_pool", "n_bound_triples"};
    static const std::set<std::string> none;
    if (section == "run") return run;
    if (section == "group") return group;
    if (section == "dataset") return dataset;
    if (section == "network") return network;
    if (section.rfind("layer", 0) == 0) return layer;
    if (section == "sweep") return sweep;
    return none;
}

KernelSpec kernel_from_kv(const KeyValueFile& kv, const std::string& sec) {
    const std::string family = kv.get_or(sec, "kernel", "exponential");
    if (family == "exponential") return KernelSpec::exponential();
    if (family == "rbf") {
        if (kv.has(sec, "bandwidth"))
            return KernelSpec::rbf_from_bandwidth(kv.get_double(sec, "bandwidth"));
        return KernelSpec::rbf(kv.get_double(sec, "alpha"));
    }
    if (family == "arccos1") return KernelSpec::arccos1();
    if (family == "polynomial")
        return KernelSpec::polynomial(static_cast<int>(kv.get_int_or(sec, "degree", 2)),
                                      kv.get_double_or(sec, "offset", 0.5));
    throw ConfigError("unknown kernel family '" + family + "' in [" + sec + "]");
}

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        std::string item = s.substr(pos, comma - pos);
        const std::size_t a = item.find_first_not_of(" \t");
        const std::size_t b = item.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
        pos = comma + 1;
    }
    return out;
}

} // namespace

RunConfig parse_config_string(const std::string& text, const std::string& origin) {
    const KeyValueFile kv = KeyValueFile::parse_string(text, origin);

    // strict mode: every key must be known
    for (const std::string& sec : kv.section_names()) {
        const auto& allowed = allowed_keys(sec);
        if (allowed.empty()) throw ConfigError("unknown section [" + sec + "]");
        for (const std::string& key : kv.keys(sec)) {
            if (!allowed.count(key))
                throw ConfigError("unknown key '" + key + "' in [" + sec + "]");
        }
    }

    RunConfig cfg;
    cfg.seed = kv.get_u64_or("run", "seed", 42);
    cfg.output_dir = kv.get_or("run", "output_dir", "out");
    cfg.threads = static_cast<int>(kv.get_int_or("run", "threads", 0));

    const std::string kind = kv.get_or("group", "kind", "se2");
    cfg.group.kind = group_kind_from_name(kind);
    switch (cfg.group.kind) {
    case GroupKind::SE2:
        cfg.group.dims = {static_cast<int>(kv.get_int_or("group", "height", 16)),
                          static_cast<int>(kv.get_int_or("group", "width", 16)),
                          static_cast<int>(kv.get_int_or("group", "n_theta", 4))};
        break;
    case GroupKind::S2:
        cfg.group.dims = {static_cast<int>(kv.get_int_or("group", "n_beta", 16)),
                          static_cast<int>(kv.get_int_or("group", "n_phi", 32))};
        break;
    case GroupKind::SO3:
        cfg.group.dims = {static_cast<int>(kv.get_int_or("group", "n_alpha", 4)),
                          static_cast<int>(kv.get_int_or("group", "n_beta", 4)),
                          static_cast<int>(kv.get_int_or("group", "n_gamma", 4))};
        break;
    default:
        throw ConfigError("group kind '" + kind + "' cannot be used in a run config");
    }

    cfg.dataset.source = kv.get_or("dataset", "source", "synthetic");
    if (cfg.dataset.source != "synthetic" && cfg.dataset.source != "idx")
        throw ConfigError("dataset source must be 'synthetic' or 'idx'");
    cfg.dataset.n_per_class = static_cast<int>(kv.get_int_or("dataset", "n_per_class", 6));
    cfg.dataset.image_size = static_cast<int>(kv.get_int_or("dataset", "image_size", 16));
    cfg.dataset.rotate = kv.get_bool_or("dataset", "rotate", true);
    cfg.dataset.images_path = kv.get_or("dataset", "images", "");
    cfg.dataset.labels_path = kv.get_or("dataset", "labels", "");
    if (cfg.dataset.source == "idx" &&
        (cfg.dataset.images_path.empty() || cfg.dataset.labels_path.empty()))
        throw ConfigError("dataset source 'idx' requires 'images' and 'labels' paths");

    const int n_layers = static_cast<int>(kv.get_int_or("network", "n_layers", 2));
    if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
    cfg.network.sigma0 = kv.get_double_or("network", "sigma0", 1.0);
    cfg.network.n_fit_patches = static_cast<int>(kv.get_int_or("network", "n_fit_patches", 1500));
    cfg.fiber_average = kv.get_bool_or("network", "fiber_average", true);
    for (int k = 1; k <= n_layers; ++k) {
        const std::string sec = "layer" + std::to_string(k);
        LayerSpec ls;
        ls.kernel = kernel_from_kv(kv, sec);
        ls.p = static_cast<int>(kv.get_int_or(sec, "p", 8));
        ls.kappa = kv.get_double_or(sec, "kappa", 2.0);
        ls.sigma = kv.get_double_or(sec, "sigma", std::pow(2.0, k - 1));
        ls.eps = kv.get_double_or(sec, "eps", 1e-6);
        ls.seed = kv.get_u64_or(sec, "seed", derive_seed(cfg.seed, 0x1a7e5, k));
        ls.fiber_offsets = kv.get_bool_or(sec, "fiber_offsets", false);
        cfg.network.layers.push_back(ls);
    }

    cfg.sweep.alphas = kv.get_list_or("sweep", "alphas", cfg.sweep.alphas);
    cfg.sweep.kappas = kv.get_list_or("sweep", "kappas", cfg.sweep.kappas);
    cfg.sweep.sigmas = kv.get_list_or("sweep", "sigmas", cfg.sweep.sigmas);
    cfg.sweep.rbf_bandwidths = kv.get_list_or("sweep", "rbf_bandwidths", cfg.sweep.rbf_bandwidths);
    if (kv.has("sweep", "alpha_kernels"))
        cfg.sweep.alpha_kernels = split_names(kv.get("sweep", "alpha_kernels"));
    cfg.sweep.default_kappa = kv.get_double_or("sweep", "default_kappa", 2.0);
    cfg.sweep.default_sigma = kv.get_double_or("sweep", "default_sigma", 2.0);
    cfg.sweep.tau.smoothness = kv.get_double_or("sweep", "tau_smoothness", 3.0);
    cfg.sweep.tau.target_grad = kv.get_double_or("sweep", "tau_target_grad", 0.4);
    cfg.sweep.rotation_augment = kv.get_bool_or("sweep", "rotation_augment", false);
    cfg.sweep.mixed_pool = static_cast<int>(kv.get_int_or("sweep", "mixed_pool", 50));
    cfg.sweep.n_bound_triples = static_cast<int>(kv.get_int_or("sweep", "n_bound_triples", 4));

    if (cfg.sweep.alphas.empty() || cfg.sweep.kappas.empty() || cfg.sweep.sigmas.empty())
        throw ConfigError("sweep axes must be non-empty");
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_config_string(text, path);
}

KeyValueFile config_to_keyvalue(const RunConfig& cfg) {
    KeyValueFile kv;
    kv.set_u64("run", "seed", cfg.seed);
    kv.set("run", "output_dir", cfg.output_dir);
    kv.set("run", "threads", static_cast<std::int64_t>(cfg.threads));

    kv.set("group", "kind", group_kind_name(cfg.group.kind));
    switch (cfg.group.kind) {
    case GroupKind::SE2:
        kv.set("group", "height", static_cast<std::int64_t>(cfg.group.dims[0]));
        kv.set("group", "width", static_cast<std::int64_t>(cfg.group.dims[1]));
        kv.set("group", "n_theta", static_cast<std::int64_t>(cfg.group.dims[2]));
        break;
    case GroupKind::S2:
        kv.set("group", "n_beta", static_cast<std::int64_t>(cfg.group.dims[0]));
        kv.set("group", "n_phi", static_cast<std::int64_t>(cfg.group.dims[1]));
        break;
    case GroupKind::SO3:
        kv.set("group", "n_alpha", static_cast<std::int64_t>(cfg.group.dims[0]));
        kv.set("group", "n_beta", static_cast<std::int64_t>(cfg.group.dims[1]));
        kv.set("group", "n_gamma", static_cast<std::int64_t>(cfg.group.dims[2]));
        break;
    default: break;
    }

    kv.set("dataset", "source", cfg.dataset.source);
    kv.set("dataset", "n_per_class", static_cast<std::int64_t>(cfg.dataset.n_per_class));
    kv.set("dataset", "image_size", static_cast<std::int64_t>(cfg.dataset.image_size));
    kv.set("dataset", "rotate", cfg.dataset.rotate ? "true" : "false");
    if (!cfg.dataset.images_path.empty()) kv.set("dataset", "images", cfg.dataset.images_path);
    if (!cfg.dataset.labels_path.empty()) kv.set("dataset", "labels", cfg.dataset.labels_path);

    kv.set("network", "n_layers", static_cast<std::int64_t>(cfg.network.layers.size()));
    kv.set("network", "sigma0", cfg.network.sigma0);
    kv.set("network", "n_fit_patches", static_cast<std::int64_t>(cfg.network.n_fit_patches));
    kv.set("network", "fiber_average", cfg.fiber_average ? "true" : "false");
    for (std::size_t k = 0; k < cfg.network.layers.size(); ++k) {
        const LayerSpec& ls = cfg.network.layers[k];
        const std::string sec = "layer" + std::to_string(k + 1);
        kv.set(sec, "kernel", ls.kernel.name());
        kv.set(sec, "alpha", ls.kernel.alpha);
        kv.set(sec, "degree", static_cast<std::int64_t>(ls.kernel.degree));
        kv.set(sec, "offset", ls.kernel.offset);
        kv.set(sec, "p", static_cast<std::int64_t>(ls.p));
        kv.set(sec, "kappa", ls.kappa);
        kv.set(sec, "sigma", ls.sigma);
        kv.set(sec, "eps", ls.eps);
        kv.set_u64(sec, "seed", ls.seed);
        kv.set(sec, "fiber_offsets", ls.fiber_offsets ? "true" : "false");
    }

    auto set_list = [&kv](const std::string& key, const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ",";
            s += fmt_double(v[i]);
        }
        kv.set("sweep", key, s);
    };
    set_list("alphas", cfg.sweep.alphas);
    set_list("kappas", cfg.sweep.kappas);
    set_list("sigmas", cfg.sweep.sigmas);
    set_list("rbf_bandwidths", cfg.sweep.rbf_bandwidths);
    std::string ks;
    for (std::size_t i = 0; i < cfg.sweep.alpha_kernels.size(); ++i) {
        if (i) ks += ",";
        ks += cfg.sweep.alpha_kernels[i];
    }
    kv.set("sweep", "alpha_kernels", ks);
    kv.set("sweep", "default_kappa", cfg.sweep.default_kappa);
    kv.set("sweep", "default_sigma", cfg.sweep.default_sigma);
    kv.set("sweep", "tau_smoothness", cfg.sweep.tau.smoothness);
    kv.set("sweep", "tau_target_grad", cfg.sweep.tau.target_grad);
    kv.set("sweep", "rotation_augment", cfg.sweep.rotation_augment ? "true" : "false");
    kv.set("sweep", "mixed_pool", static_cast<std::int64_t>(cfg.sweep.mixed_pool));
    kv.set("sweep", "n_bound_triples", static_cast<std::int64_t>(cfg.sweep.n_bound_triples));
    return kv;
}

std::string config_hash(const RunConfig& cfg) {
    // run-control keys do not change results and stay out of the fingerprint
    KeyValueFile kv = config_to_keyvalue(cfg);
    kv.set("run", "output_dir", "");
    kv.set("run", "threads", static_cast<std::int64_t>(0));
    return hash_hex(fnv1a(kv.serialize()));
}

Dataset build_dataset(const RunConfig& cfg) {
    Dataset ds;
    if (cfg.dataset.source == "synthetic") {
        ds = make_synthetic(cfg.dataset.n_per_class, cfg.dataset.image_size,
                            derive_seed(cfg.seed, 0xda7a));
    } else {
        namespace fs = std::filesystem;
        auto resolve = [](const std::string& p) -> std::string {
            if (fs::exists(p)) return p;
            if (const char* root = std::getenv("ECKN_DATA_DIR")) {
                const std::string joined = (fs::path(root) / p).string();
                if (fs::exists(joined)) return joined;
            }
            return p;
        };
        ds = load_idx(resolve(cfg.dataset.images_path), resolve(cfg.dataset.labels_path));
    }
    if (cfg.dataset.rotate) ds = make_rotated(ds, derive_seed(cfg.seed, 0x707a7e));
    return ds;
}

} // namespace eckn
