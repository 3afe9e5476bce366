#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsciml/errors.hpp"
#include "fedsciml/rng.hpp"

namespace fedsciml::data {

/// Flat row-major coordinate storage: size() points of dimension dim.
struct PointSet {
    std::size_t dim = 1;
    std::vector<double> values;

    PointSet() = default;
    explicit PointSet(std::size_t d) : dim(d) {}

    std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
    std::span<const double> point(std::size_t i) const {
        return {values.data() + i * dim, dim};
    }
    void push_back(std::span<const double> p) {
        values.insert(values.end(), p.begin(), p.end());
    }
    void push_back(double x) { values.push_back(x); }
    void push_back(double x, double y) {
        values.push_back(x);
        values.push_back(y);
    }
};

enum class PartitionKind { OneD, TwoDX, TwoDXY };

struct PartitionSpec {
    PartitionKind kind = PartitionKind::OneD;
    int n_total = 1; // total subdomain count along the partitioned axis (per axis for xy)
    int clients = 1;
};

struct ShardProvenance {
    std::string method;          // "1d", "2d_x", "2d_xy", "chebyshev"
    int n = 0;                   // subdomain count (or active term count)
    int clients = 0;
    std::vector<int> blocks;     // owned block/cell indices
    int window_lo = 0, window_hi = -1; // chebyshev support, when applicable
};

/// One client's dataset plus where it came from.
struct Shard {
    PointSet points;
    std::optional<std::vector<double>> labels;
    int client_id = 0;
    ShardProvenance provenance;
};

/// Splits sorted 1D-ordered data into n_total contiguous blocks of near-equal
/// point count; block j goes to client j mod K. When the count does not
/// divide evenly the trailing blocks absorb one extra point each, so block
/// boundaries stay monotone in the coordinate.
std::vector<Shard> partition_1d(const PointSet& sorted_points,
                                std::span<const double> labels,
                                int n_total, int clients);

/// partition_1d applied to the first coordinate only; points are reordered
/// lexicographically by (x, remaining coords) first.
std::vector<Shard> partition_2d_x(const PointSet& points,
                                  std::span<const double> labels,
                                  int n_total, int clients);

/// n_per_axis^2 equal-width cells over the bounding box, indexed row-major
/// (cell = iy * n + ix); cell (ix, iy) goes to client (ix + iy) mod K, the
/// checkerboard for K=2 and the cyclic coloring for K>=3. Empty cells are
/// permitted.
std::vector<Shard> partition_2d_xy(const PointSet& points,
                                   std::span<const double> labels,
                                   int n_per_axis, int clients);

/// Concatenation of shards in client order; used to build the centralized
/// dataset D = union of D_k.
Shard concat_shards(std::span<const Shard> shards);

/// Hammersley point set on [0,1]^2: point i = (i/count, vdc_base2(i)).
PointSet hammersley(int count, int dim = 2);

/// Base-2 van der Corput radical inverse.
double van_der_corput(std::uint64_t i);

// --- Chebyshev functional space -------------------------------------------

enum class ChebyshevMode { Forward, Middle, Inverse };

ChebyshevMode chebyshev_mode_from_name(const std::string& name);
const char* chebyshev_mode_name(ChebyshevMode mode);

struct ChebyshevSpaceSpec {
    int total_terms = 10; // M
    int active_terms = 1; // n
    ChebyshevMode mode = ChebyshevMode::Forward;

    void validate() const;
};

/// Active index window [lo, hi], n terms wide, clamped into [0, M-1]:
/// forward [0, n-1], inverse [M-n, M-1], middle starts at floor((M-n)/2).
std::pair<int, int> chebyshev_support(const ChebyshevSpaceSpec& spec);

/// p(x) = sum a_i T_i(x) with uniform coefficients on [-1,1] over the support
/// window and zero elsewhere. Evaluation uses the three-term recurrence.
struct ChebyshevFunction {
    std::vector<double> coefficients; // length M
    double operator()(double x) const;
};

std::vector<ChebyshevFunction> sample_chebyshev(const ChebyshevSpaceSpec& spec,
                                                CounterRng& rng, int count);

// --- CSV round trips --------------------------------------------------------

/// One row per point: coordinates, optional label, client_id.
void write_shard_csv(const std::string& path, const Shard& shard);
Shard read_shard_csv(const std::string& path);

} // namespace fedsciml::data
