#include "sigma2/container.hpp"

#include "sigma2/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sigma2 {

namespace {

constexpr const char* kMagic = "SIGMA2-CONTAINER 1";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::uint64_t to_le(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::little) return x;
    std::uint64_t y = 0;
    for (int i = 0; i < 8; ++i) y |= ((x >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return y;
}

const std::string& require(const Container& c, const std::string& key) {
    const std::string* v = c.value(key);
    if (!v) throw Error(ErrorKind::Io, "container is missing header key '" + key + "'");
    return *v;
}

const ContainerField& require_field(const Container& c, const std::string& name) {
    const ContainerField* f = c.field(name);
    if (!f) throw Error(ErrorKind::Io, "container is missing field '" + name + "'");
    return *f;
}

}  // namespace

const std::string* Container::value(const std::string& key) const {
    for (const auto& [k, v] : header)
        if (k == key) return &v;
    return nullptr;
}

const ContainerField* Container::field(const std::string& name) const {
    for (const auto& f : fields)
        if (f.name == name) return &f;
    return nullptr;
}

void Container::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : header)
        if (k == key) {
            v = value;
            return;
        }
    header.emplace_back(key, value);
}

void Container::add(std::string name, std::vector<std::size_t> shape, std::vector<double> data) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    if (n != data.size()) throw Error(ErrorKind::InvalidArgument, "field '" + name + "' shape does not match data");
    fields.push_back({std::move(name), std::move(shape), std::move(data)});
}

void write_container(const std::filesystem::path& path, const Container& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << kMagic << '\n';
    for (const auto& [k, v] : c.header) {
        if (k.empty() || k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos)
            throw Error(ErrorKind::InvalidArgument, "bad container header entry '" + k + "'");
        out << k << ' ' << v << '\n';
    }
    for (const auto& f : c.fields) {
        out << "field " << f.name << ' ' << f.shape.size();
        for (auto d : f.shape) out << ' ' << d;
        out << '\n';
    }
    out << "END_HEADER\n";
    for (const auto& f : c.fields)
        for (double v : f.data) {
            const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
            out.write(reinterpret_cast<const char*>(&bits), 8);
        }
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw Error(ErrorKind::Io, path.string() + " is not a model container");
    Container c;
    bool ended = false;
    while (std::getline(in, line)) {
        if (line == "END_HEADER") {
            ended = true;
            break;
        }
        const auto sp = line.find(' ');
        const std::string key = line.substr(0, sp);
        const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
        if (key == "field") {
            std::istringstream ls(rest);
            ContainerField f;
            std::size_t rank = 0;
            if (!(ls >> f.name >> rank)) throw Error(ErrorKind::Io, "malformed field line: " + line);
            f.shape.resize(rank);
            for (auto& d : f.shape)
                if (!(ls >> d)) throw Error(ErrorKind::Io, "malformed field line: " + line);
            c.fields.push_back(std::move(f));
        } else {
            c.header.emplace_back(key, rest);
        }
    }
    if (!ended) throw Error(ErrorKind::Io, "container header not terminated");
    for (auto& f : c.fields) {
        std::size_t n = 1;
        for (auto d : f.shape) n *= d;
        f.data.resize(n);
        for (auto& v : f.data) {
            std::uint64_t bits = 0;
            if (!in.read(reinterpret_cast<char*>(&bits), 8)) throw Error(ErrorKind::Io, "truncated container payload");
            v = std::bit_cast<double>(to_le(bits));
        }
    }
    return c;
}

Container export_model(const Model& model, const ConformalState* state) {
    Container c;
    const ModelSpec& s = model.spec;
    c.set("model", to_string(s.id));
    c.set("dim", std::to_string(s.dim));
    c.set("cap_radius", fmt(s.cap_radius));
    c.set("band_r0", fmt(s.band_r0));
    c.set("band_r1", fmt(s.band_r1));
    c.set("warp_a", join(s.warp_a));
    c.set("warp_b", join(s.warp_b));
    c.set("slab_r0", fmt(s.slab_r0));
    c.set("slab_r1", fmt(s.slab_r1));
    c.set("slab_period", fmt(s.slab_period));
    c.set("base", to_string(s.base));
    c.set("amplitude", fmt(s.amplitude));
    c.set("seed", std::to_string(s.seed));
    c.set("metric_source", model.metric.source);
    c.set("closed_form", model.metric.catalog ? "1" : "0");

    const ChartGrid& g = model.grid;
    c.set("grid_dim", std::to_string(g.dim()));
    c.set("grid_symmetry", g.radial() ? "radial" : "none");
    c.set("grid_axes", std::to_string(g.axes().size()));
    for (std::size_t a = 0; a < g.axes().size(); ++a) {
        const Axis& ax = g.axes()[a];
        c.set("axis" + std::to_string(a),
              std::to_string(ax.count) + " " + fmt(ax.origin) + " " + fmt(ax.spacing) + " " + (ax.periodic ? "1" : "0"));
    }
    std::string faces;
    for (const Face& f : g.boundary_faces()) faces += (faces.empty() ? "" : " ") + std::to_string(f.axis) + ":" + std::to_string(f.side);
    c.set("grid_faces", faces);

    const std::size_t N = model.size();
    const auto n = static_cast<std::size_t>(model.dim());
    auto flatten = [&](const std::vector<Matrix>& m) {
        std::vector<double> out;
        out.reserve(N * n * n);
        for (const auto& x : m)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) out.push_back(x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        return out;
    };
    c.add("g", {N, n, n}, flatten(model.metric.g));
    c.add("volume_weights", {N}, model.metric.volume_weights);
    if (g.radial()) {
        c.add("radial_alpha", {N}, model.metric.radial_alpha);
        c.add("radial_beta", {N}, model.metric.radial_beta);
    }
    if (state) {
        c.set("state_t", fmt(state->t));
        c.add("u", {N}, state->u);
        c.add("W", {N, n, n}, flatten(state->W));
        std::vector<double> sp;
        for (const auto& s2 : state->spectra) sp.insert(sp.end(), s2.values.begin(), s2.values.end());
        c.add("spectra", {N, n}, std::move(sp));
    }
    return c;
}

Model import_model(const Container& c) {
    ModelSpec s;
    s.id = catalog_from_string(require(c, "model"));
    s.dim = std::stoi(require(c, "dim"));
    s.cap_radius = std::stod(require(c, "cap_radius"));
    s.band_r0 = std::stod(require(c, "band_r0"));
    s.band_r1 = std::stod(require(c, "band_r1"));
    s.warp_a = split_doubles(require(c, "warp_a"));
    s.warp_b = split_doubles(require(c, "warp_b"));
    s.slab_r0 = std::stod(require(c, "slab_r0"));
    s.slab_r1 = std::stod(require(c, "slab_r1"));
    s.slab_period = std::stod(require(c, "slab_period"));
    s.base = catalog_from_string(require(c, "base"));
    s.amplitude = std::stod(require(c, "amplitude"));
    s.seed = std::stoull(require(c, "seed"));
    s.validate();

    const int dim = std::stoi(require(c, "grid_dim"));
    const Symmetry sym = require(c, "grid_symmetry") == "radial" ? Symmetry::Radial : Symmetry::None;
    const int naxes = std::stoi(require(c, "grid_axes"));
    std::vector<Axis> axes;
    for (int a = 0; a < naxes; ++a) {
        std::istringstream ls(require(c, "axis" + std::to_string(a)));
        Axis ax;
        int periodic = 0;
        if (!(ls >> ax.count >> ax.origin >> ax.spacing >> periodic)) throw Error(ErrorKind::Io, "malformed axis entry");
        ax.periodic = periodic != 0;
        axes.push_back(ax);
    }
    std::vector<Face> faces;
    {
        std::istringstream ls(require(c, "grid_faces"));
        std::string tok;
        while (ls >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw Error(ErrorKind::Io, "malformed face entry '" + tok + "'");
            faces.push_back({std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1))});
        }
    }
    ChartGrid grid(dim, axes, faces, sym);

    const std::size_t N = grid.node_count();
    const auto n = static_cast<std::size_t>(dim);
    const ContainerField& gf = require_field(c, "g");
    if (gf.shape != std::vector<std::size_t>{N, n, n}) throw Error(ErrorKind::Io, "field g has the wrong shape");
    MetricField metric;
    metric.source = c.value("metric_source") ? *c.value("metric_source") : "container";
    for (std::size_t i = 0; i < N; ++i) {
        Matrix g(dim, dim);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gf.data[(i * n + a) * n + b];
        const Eigen::LLT<Matrix> llt(g);
        if (llt.info() != Eigen::Success) throw Error(ErrorKind::InvalidMetric, "metric not SPD at node " + std::to_string(i));
        metric.g_inv.push_back(llt.solve(Matrix::Identity(dim, dim)));
        metric.g.push_back(std::move(g));
    }
    metric.volume_weights = require_field(c, "volume_weights").data;
    if (metric.volume_weights.size() != N) throw Error(ErrorKind::Io, "volume_weights has the wrong length");
    if (grid.radial()) {
        metric.radial_alpha = require_field(c, "radial_alpha").data;
        metric.radial_beta = require_field(c, "radial_beta").data;
    }
    if (c.value("closed_form") && *c.value("closed_form") == "1") metric.catalog = s;
    return make_model(s, std::move(grid), std::move(metric));
}

}  // namespace sigma2
