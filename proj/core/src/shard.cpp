#include "fedsciml/shard.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedsciml/csv.hpp"

namespace fedsciml::data {

namespace {

// Near-equal block sizes with remainders absorbed by the trailing blocks.
std::vector<std::size_t> block_offsets(std::size_t count, int n_total) {
    const std::size_t n = static_cast<std::size_t>(n_total);
    const std::size_t base = count / n;
    const std::size_t rem = count % n;
    std::vector<std::size_t> offsets(n + 1, 0);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t sz = base + (j >= n - rem ? 1 : 0);
        offsets[j + 1] = offsets[j] + sz;
    }
    return offsets;
}

std::vector<Shard> assign_blocks(const PointSet& pts, std::span<const double> labels,
                                 const std::vector<std::size_t>& offsets,
                                 int n_total, int clients, const char* method) {
    std::vector<Shard> shards(static_cast<std::size_t>(clients));
    for (int k = 0; k < clients; ++k) {
        shards[k].client_id = k;
        shards[k].points.dim = pts.dim;
        shards[k].provenance.method = method;
        shards[k].provenance.n = n_total;
        shards[k].provenance.clients = clients;
        if (!labels.empty())
            shards[k].labels.emplace();
    }
    for (int j = 0; j < n_total; ++j) {
        Shard& s = shards[static_cast<std::size_t>(j % clients)];
        s.provenance.blocks.push_back(j);
        for (std::size_t i = offsets[j]; i < offsets[j + 1]; ++i) {
            s.points.push_back(pts.point(i));
            if (!labels.empty())
                s.labels->push_back(labels[i]);
        }
    }
    return shards;
}

} // namespace

std::vector<Shard> partition_1d(const PointSet& sorted_points,
                                std::span<const double> labels,
                                int n_total, int clients) {
    if (clients < 1 || n_total < clients)
        throw UsageError("partition_1d: need n_total >= clients >= 1");
    const std::size_t count = sorted_points.size();
    if (count < static_cast<std::size_t>(n_total))
        throw UsageError("partition_1d: fewer points than blocks");
    if (!labels.empty() && labels.size() != count)
        throw UsageError("partition_1d: label count mismatch");
    for (std::size_t i = 0; i + 1 < count; ++i)
        if (sorted_points.point(i)[0] > sorted_points.point(i + 1)[0])
            throw UsageError("partition_1d: points must be sorted ascending");

    auto offsets = block_offsets(count, n_total);
    return assign_blocks(sorted_points, labels, offsets, n_total, clients, "1d");
}

std::vector<Shard> partition_2d_x(const PointSet& points,
                                  std::span<const double> labels,
                                  int n_total, int clients) {
    if (points.dim < 2)
        throw UsageError("partition_2d_x: need 2D points");
    if (clients < 1 || n_total < clients)
        throw UsageError("partition_2d_x: need n_total >= clients >= 1");
    const std::size_t count = points.size();
    if (count < static_cast<std::size_t>(n_total))
        throw UsageError("partition_2d_x: fewer points than blocks");
    if (!labels.empty() && labels.size() != count)
        throw UsageError("partition_2d_x: label count mismatch");

    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto pa = points.point(a), pb = points.point(b);
        return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
    });

    PointSet sorted(points.dim);
    sorted.values.reserve(points.values.size());
    std::vector<double> sorted_labels;
    for (std::size_t i : order) {
        sorted.push_back(points.point(i));
        if (!labels.empty())
            sorted_labels.push_back(labels[i]);
    }
    auto offsets = block_offsets(count, n_total);
    auto shards = assign_blocks(sorted, sorted_labels, offsets, n_total, clients, "2d_x");
    return shards;
}

std::vector<Shard> partition_2d_xy(const PointSet& points,
                                   std::span<const double> labels,
                                   int n_per_axis, int clients) {
    if (points.dim < 2)
        throw UsageError("partition_2d_xy: need 2D points");
    if (n_per_axis < 1 || clients < 1)
        throw UsageError("partition_2d_xy: need n_per_axis >= 1 and clients >= 1");
    const std::size_t count = points.size();
    if (count == 0)
        throw UsageError("partition_2d_xy: empty point set");
    if (!labels.empty() && labels.size() != count)
        throw UsageError("partition_2d_xy: label count mismatch");

    double xmin = points.point(0)[0], xmax = xmin;
    double ymin = points.point(0)[1], ymax = ymin;
    for (std::size_t i = 1; i < count; ++i) {
        auto p = points.point(i);
        xmin = std::min(xmin, p[0]);
        xmax = std::max(xmax, p[0]);
        ymin = std::min(ymin, p[1]);
        ymax = std::max(ymax, p[1]);
    }
    const double wx = xmax > xmin ? (xmax - xmin) / n_per_axis : 1.0;
    const double wy = ymax > ymin ? (ymax - ymin) / n_per_axis : 1.0;
    auto cell_index = [&](double v, double lo, double w) {
        int c = static_cast<int>((v - lo) / w);
        return std::clamp(c, 0, n_per_axis - 1);
    };

    std::vector<Shard> shards(static_cast<std::size_t>(clients));
    for (int k = 0; k < clients; ++k) {
        shards[k].client_id = k;
        shards[k].points.dim = points.dim;
        shards[k].provenance.method = "2d_xy";
        shards[k].provenance.n = n_per_axis;
        shards[k].provenance.clients = clients;
        if (!labels.empty())
            shards[k].labels.emplace();
    }
    for (int iy = 0; iy < n_per_axis; ++iy)
        for (int ix = 0; ix < n_per_axis; ++ix)
            shards[static_cast<std::size_t>((ix + iy) % clients)]
                .provenance.blocks.push_back(iy * n_per_axis + ix);

    for (std::size_t i = 0; i < count; ++i) {
        auto p = points.point(i);
        const int ix = cell_index(p[0], xmin, wx);
        const int iy = cell_index(p[1], ymin, wy);
        Shard& s = shards[static_cast<std::size_t>((ix + iy) % clients)];
        s.points.push_back(p);
        if (!labels.empty())
            s.labels->push_back(labels[i]);
    }
    return shards;
}

Shard concat_shards(std::span<const Shard> shards) {
    if (shards.empty())
        throw UsageError("concat_shards: empty shard list");
    Shard all;
    all.client_id = -1;
    all.points.dim = shards.front().points.dim;
    all.provenance.method = "union";
    all.provenance.clients = shards.front().provenance.clients;
    all.provenance.n = shards.front().provenance.n;
    const bool labeled = shards.front().labels.has_value();
    if (labeled)
        all.labels.emplace();
    for (const Shard& s : shards) {
        if (s.points.dim != all.points.dim || s.labels.has_value() != labeled)
            throw UsageError("concat_shards: mixed shard shapes");
        all.points.values.insert(all.points.values.end(), s.points.values.begin(),
                                 s.points.values.end());
        if (labeled)
            all.labels->insert(all.labels->end(), s.labels->begin(), s.labels->end());
    }
    return all;
}

double van_der_corput(std::uint64_t i) {
    double result = 0.0;
    double f = 0.5;
    while (i > 0) {
        if (i & 1)
            result += f;
        i >>= 1;
        f *= 0.5;
    }
    return result;
}

PointSet hammersley(int count, int dim) {
    if (count < 1)
        throw UsageError("hammersley: count must be >= 1");
    if (dim != 2)
        throw UsageError("hammersley: only dim = 2 is supported");
    PointSet pts(2);
    pts.values.reserve(static_cast<std::size_t>(count) * 2);
    for (int i = 0; i < count; ++i)
        pts.push_back(static_cast<double>(i) / count, van_der_corput(static_cast<std::uint64_t>(i)));
    return pts;
}

ChebyshevMode chebyshev_mode_from_name(const std::string& name) {
    if (name == "forward") return ChebyshevMode::Forward;
    if (name == "middle") return ChebyshevMode::Middle;
    if (name == "inverse") return ChebyshevMode::Inverse;
    throw UsageError("unknown chebyshev mode '" + name + "'");
}

const char* chebyshev_mode_name(ChebyshevMode mode) {
    switch (mode) {
    case ChebyshevMode::Forward: return "forward";
    case ChebyshevMode::Middle: return "middle";
    case ChebyshevMode::Inverse: return "inverse";
    }
    return "?";
}

void ChebyshevSpaceSpec::validate() const {
    if (total_terms < 1)
        throw UsageError("chebyshev: total_terms must be >= 1");
    if (active_terms < 1 || active_terms > total_terms)
        throw UsageError("chebyshev: need 1 <= active_terms <= total_terms");
}

std::pair<int, int> chebyshev_support(const ChebyshevSpaceSpec& spec) {
    spec.validate();
    const int M = spec.total_terms, n = spec.active_terms;
    int lo = 0;
    switch (spec.mode) {
    case ChebyshevMode::Forward: lo = 0; break;
    case ChebyshevMode::Inverse: lo = M - n; break;
    case ChebyshevMode::Middle: lo = (M - n) / 2; break;
    }
    lo = std::clamp(lo, 0, M - 1);
    int hi = std::clamp(lo + n - 1, 0, M - 1);
    return {lo, hi};
}

double ChebyshevFunction::operator()(double x) const {
    // T_{k+1} = 2 x T_k - T_{k-1}
    double acc = 0.0;
    double tkm1 = 1.0; // T_0
    double tk = x;     // T_1
    if (!coefficients.empty())
        acc += coefficients[0] * tkm1;
    if (coefficients.size() > 1)
        acc += coefficients[1] * tk;
    for (std::size_t k = 2; k < coefficients.size(); ++k) {
        double tk1 = 2.0 * x * tk - tkm1;
        acc += coefficients[k] * tk1;
        tkm1 = tk;
        tk = tk1;
    }
    return acc;
}

std::vector<ChebyshevFunction> sample_chebyshev(const ChebyshevSpaceSpec& spec,
                                                CounterRng& rng, int count) {
    auto [lo, hi] = chebyshev_support(spec);
    std::vector<ChebyshevFunction> fns(static_cast<std::size_t>(count));
    for (auto& fn : fns) {
        fn.coefficients.assign(static_cast<std::size_t>(spec.total_terms), 0.0);
        for (int i = lo; i <= hi; ++i)
            fn.coefficients[static_cast<std::size_t>(i)] = rng.uniform(-1.0, 1.0);
    }
    return fns;
}

void write_shard_csv(const std::string& path, const Shard& shard) {
    std::ofstream os(path);
    if (!os)
        throw UsageError("cannot open '" + path + "' for writing");
    os << "# schema: fedsciml/shard/v1\n";
    for (std::size_t d = 0; d < shard.points.dim; ++d)
        os << "x" << d << ",";
    if (shard.labels)
        os << "label,";
    os << "client_id\n";
    for (std::size_t i = 0; i < shard.points.size(); ++i) {
        auto p = shard.points.point(i);
        for (double v : p)
            os << csv::format_double(v) << ",";
        if (shard.labels)
            os << csv::format_double((*shard.labels)[i]) << ",";
        os << shard.client_id << "\n";
    }
}

Shard read_shard_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw UsageError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line.rfind("# schema: fedsciml/shard/", 0) != 0)
        throw UsageError("'" + path + "': missing shard schema header");
    if (!std::getline(is, line))
        throw UsageError("'" + path + "': missing column header");
    auto cols = csv::split(line);
    std::size_t dim = 0;
    bool labeled = false;
    for (const auto& c : cols) {
        if (!c.empty() && c[0] == 'x')
            ++dim;
        else if (c == "label")
            labeled = true;
    }
    if (dim == 0)
        throw UsageError("'" + path + "': no coordinate columns");

    Shard shard;
    shard.points.dim = dim;
    if (labeled)
        shard.labels.emplace();
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        auto fields = csv::split(line);
        if (fields.size() != cols.size())
            throw UsageError("'" + path + "': ragged row");
        for (std::size_t d = 0; d < dim; ++d)
            shard.points.push_back(std::stod(fields[d]));
        if (labeled)
            shard.labels->push_back(std::stod(fields[dim]));
        shard.client_id = std::stoi(fields.back());
    }
    if (shard.points.size() == 0)
        throw UsageError("'" + path + "': empty shard");
    return shard;
}

} // namespace fedsciml::data
