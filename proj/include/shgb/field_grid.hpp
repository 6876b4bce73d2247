#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "beam.hpp"

namespace shgb {

/// Uniform axis with `count` nodes from min to max inclusive.
struct Axis {
    double min = 0.0;
    double max = 1.0;
    int count = 2;

    [[nodiscard]] double spacing() const { return (max - min) / (count - 1); }
    [[nodiscard]] double node(int i) const { return min + i * spacing(); }
    bool operator==(const Axis&) const = default;
};

/// Complex values on a tensor-product node grid, one layer per surface.
/// Nodes are stored row-major (last axis fastest); layers are contiguous.
class FieldGrid {
public:
    FieldGrid() = default;

    FieldGrid(std::vector<Axis> axes, int n_surfaces)
        : axes_(std::move(axes)), n_surfaces_(n_surfaces)
    {
        if (axes_.empty())
            throw std::invalid_argument("FieldGrid: at least one axis required");
        if (n_surfaces_ < 1)
            throw std::invalid_argument("FieldGrid: n_surfaces must be >= 1");
        n_nodes_ = 1;
        for (const auto& a : axes_) {
            if (a.count < 2)
                throw std::invalid_argument("FieldGrid: each axis needs at least 2 nodes");
            if (!(a.max > a.min))
                throw std::invalid_argument("FieldGrid: axis max must exceed min");
            n_nodes_ *= static_cast<std::size_t>(a.count);
        }
        values_.assign(n_nodes_ * static_cast<std::size_t>(n_surfaces_), cplx(0.0, 0.0));
    }

    [[nodiscard]] int dim() const { return static_cast<int>(axes_.size()); }
    [[nodiscard]] int n_surfaces() const { return n_surfaces_; }
    [[nodiscard]] std::size_t n_nodes() const { return n_nodes_; }
    [[nodiscard]] const std::vector<Axis>& axes() const { return axes_; }
    [[nodiscard]] const Axis& axis(int d) const { return axes_[static_cast<std::size_t>(d)]; }

    [[nodiscard]] double cell_volume() const
    {
        double v = 1.0;
        for (const auto& a : axes_)
            v *= a.spacing();
        return v;
    }

    [[nodiscard]] bool same_layout(const FieldGrid& o) const
    {
        return axes_ == o.axes_ && n_surfaces_ == o.n_surfaces_;
    }

    cplx& at(int surface, std::size_t node) { return values_[offset(surface) + node]; }
    [[nodiscard]] const cplx& at(int surface, std::size_t node) const
    {
        return values_[offset(surface) + node];
    }

    cplx* layer(int surface) { return values_.data() + offset(surface); }
    [[nodiscard]] const cplx* layer(int surface) const { return values_.data() + offset(surface); }

    std::vector<cplx>& values() { return values_; }
    [[nodiscard]] const std::vector<cplx>& values() const { return values_; }

    /// Multi-index of a flat node number.
    [[nodiscard]] std::vector<int> multi_index(std::size_t node) const
    {
        std::vector<int> idx(axes_.size());
        for (int d = dim() - 1; d >= 0; --d) {
            const auto c = static_cast<std::size_t>(axes_[static_cast<std::size_t>(d)].count);
            idx[static_cast<std::size_t>(d)] = static_cast<int>(node % c);
            node /= c;
        }
        return idx;
    }

    [[nodiscard]] std::size_t flat_index(const std::vector<int>& idx) const
    {
        std::size_t node = 0;
        for (std::size_t d = 0; d < axes_.size(); ++d)
            node = node * static_cast<std::size_t>(axes_[d].count) + static_cast<std::size_t>(idx[d]);
        return node;
    }

    [[nodiscard]] Vec coordinates(std::size_t node) const
    {
        const auto idx = multi_index(node);
        Vec x(dim());
        for (int d = 0; d < dim(); ++d)
            x[d] = axes_[static_cast<std::size_t>(d)].node(idx[static_cast<std::size_t>(d)]);
        return x;
    }

    FieldGrid& operator+=(const FieldGrid& o)
    {
        if (!same_layout(o))
            throw std::invalid_argument("FieldGrid: layout mismatch in sum");
        for (std::size_t k = 0; k < values_.size(); ++k)
            values_[k] += o.values_[k];
        return *this;
    }

    FieldGrid& operator*=(double s)
    {
        for (auto& v : values_)
            v *= s;
        return *this;
    }

    void fill(cplx v) { std::fill(values_.begin(), values_.end(), v); }

private:
    [[nodiscard]] std::size_t offset(int surface) const
    {
        return static_cast<std::size_t>(surface) * n_nodes_;
    }

    std::vector<Axis> axes_;
    int n_surfaces_ = 0;
    std::size_t n_nodes_ = 0;
    std::vector<cplx> values_;
};

/// Grid-sampled function values: f(x) for every node of one layer.
template <class F>
void sample_layer(FieldGrid& grid, int surface, F&& f)
{
    for (std::size_t k = 0; k < grid.n_nodes(); ++k)
        grid.at(surface, k) = f(grid.coordinates(k));
}

inline constexpr double kDefaultCutoff = 40.0;

/// Adds weight * G(beam; x) to layer `surface` at every node with
/// (x-X)^T M (x-X) <= 2 eps cutoff.
///
/// Nodes are visited line by line along the last axis; on a line the exponent
/// is a complex quadratic in the node index, so consecutive values follow
/// from two running complex ratios.  An exact exp() is taken every
/// kAnchorStride nodes to bound round-off drift.
inline void accumulate_beam(FieldGrid& grid, int surface, cplx weight, const GaussianBeam& beam,
                            double epsilon, double cutoff = kDefaultCutoff)
{
    constexpr int kAnchorStride = 32;
    // exp(-745) underflows; beyond this nothing representable is added
    constexpr double kUnderflowCutoff = 745.0;

    if (surface < 0 || surface >= grid.n_surfaces())
        throw std::out_of_range("accumulate_beam: surface index out of range");
    if (grid.dim() != beam.dim())
        throw std::invalid_argument("accumulate_beam: grid/beam dimension mismatch");
    if (!(cutoff > 0.0))
        throw std::invalid_argument("accumulate_beam: cutoff must be positive");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("accumulate_beam: epsilon must be positive");
    if (weight == cplx(0.0, 0.0) || beam.A == cplx(0.0, 0.0))
        return;

    const int m = grid.dim();
    const int last = m - 1;
    const Axis& line_axis = grid.axis(last);
    const int line_len = line_axis.count;
    const double h = line_axis.spacing();
    const std::size_t n_lines = grid.n_nodes() / static_cast<std::size_t>(line_len);
    const double bound = 2.0 * epsilon * std::min(cutoff, kUnderflowCutoff);
    const cplx amp = weight * beam.A;

    const CMat Z = beam.M.cast<cplx>() + cplx(0.0, 1.0) * beam.N.cast<cplx>();
    const double mll = beam.M(last, last);
    const cplx zll = Z(last, last);
    // E(u) = e2 u^2 + e1 u + e0 along the line, u = z - X_last
    const cplx e2 = -zll / (2.0 * epsilon);

    cplx* out = grid.layer(surface);
    Vec df(m > 1 ? m - 1 : 0);
    std::vector<int> idx(static_cast<std::size_t>(m), 0);

    for (std::size_t line = 0; line < n_lines; ++line) {
        // fixed coordinates of this line
        std::size_t rem = line;
        for (int d = m - 2; d >= 0; --d) {
            const auto c = static_cast<std::size_t>(grid.axis(d).count);
            idx[static_cast<std::size_t>(d)] = static_cast<int>(rem % c);
            rem /= c;
            df[d] = grid.axis(d).node(idx[static_cast<std::size_t>(d)]) - beam.X[d];
        }
        double b_re = 0.0;
        double c_re = 0.0;
        cplx b_z(0.0, 0.0);
        cplx c_z(0.0, 0.0);
        double lin_f = 0.0;
        for (int i = 0; i < m - 1; ++i) {
            b_re += beam.M(last, i) * df[i];
            b_z += Z(last, i) * df[i];
            lin_f += beam.P[i] * df[i];
            for (int j = 0; j < m - 1; ++j) {
                c_re += df[i] * beam.M(i, j) * df[j];
                c_z += df[i] * Z(i, j) * df[j];
            }
        }
        const double disc = b_re * b_re - mll * (c_re - bound);
        if (disc < 0.0)
            continue;
        const double sq = std::sqrt(disc);
        const double u_lo = (-b_re - sq) / mll;
        const double u_hi = (-b_re + sq) / mll;
        const double k_lo_f = std::ceil((beam.X[last] + u_lo - line_axis.min) / h);
        const double k_hi_f = std::floor((beam.X[last] + u_hi - line_axis.min) / h);
        if (k_hi_f < 0.0 || k_lo_f > static_cast<double>(line_len - 1))
            continue;
        const int k_lo = static_cast<int>(std::max(k_lo_f, 0.0));
        const int k_hi = static_cast<int>(std::min(k_hi_f, static_cast<double>(line_len - 1)));

        const cplx e1 = -b_z / epsilon + cplx(0.0, beam.P[last] / epsilon);
        const cplx e0 = -c_z / (2.0 * epsilon) + cplx(0.0, (lin_f + beam.S) / epsilon);
        const cplx step_growth = std::exp(2.0 * e2 * h * h);

        cplx* row = out + line * static_cast<std::size_t>(line_len);
        cplx value;
        cplx ratio;
        for (int k = k_lo; k <= k_hi; ++k) {
            if ((k - k_lo) % kAnchorStride == 0) {
                const double u = line_axis.node(k) - beam.X[last];
                value = amp * std::exp((e2 * u + e1) * u + e0);
                ratio = std::exp(e2 * (2.0 * u * h + h * h) + e1 * h);
            }
            row[k] += value;
            value *= ratio;
            ratio *= step_growth;
        }
    }
}

// ---- CSV ------------------------------------------------------------------

inline void write_csv(std::ostream& os, const FieldGrid& grid)
{
    for (int d = 0; d < grid.dim(); ++d) {
        const auto& a = grid.axis(d);
        char buf[128];
        std::snprintf(buf, sizeof buf, "# axis %d: %.17g %.17g %d\n", d, a.min, a.max, a.count);
        os << buf;
    }
    char buf[256];
    for (std::size_t node = 0; node < grid.n_nodes(); ++node) {
        const auto idx = grid.multi_index(node);
        std::string prefix;
        for (int i : idx) {
            prefix += std::to_string(i);
            prefix += ',';
        }
        for (int s = 0; s < grid.n_surfaces(); ++s) {
            const cplx v = grid.at(s, node);
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", s, v.real(), v.imag());
            os << prefix << buf;
        }
    }
}

inline void write_csv(const std::string& path, const FieldGrid& grid)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(os, grid);
}

inline FieldGrid read_csv(std::istream& is)
{
    std::vector<Axis> axes;
    struct Row {
        std::vector<int> idx;
        int surface;
        cplx value;
    };
    std::vector<Row> rows;
    int max_surface = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        if (line[0] == '#') {
            int d = 0;
            Axis a;
            if (std::sscanf(line.c_str(), "# axis %d: %lf %lf %d", &d, &a.min, &a.max, &a.count) == 4) {
                if (d != static_cast<int>(axes.size()))
                    throw std::runtime_error("read_csv: axes out of order at line " +
                                             std::to_string(lineno));
                axes.push_back(a);
            }
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ','))
            fields.push_back(f);
        if (axes.empty() || fields.size() != axes.size() + 3)
            throw std::runtime_error("read_csv: malformed row at line " + std::to_string(lineno));
        Row r;
        for (std::size_t d = 0; d < axes.size(); ++d)
            r.idx.push_back(std::stoi(fields[d]));
        r.surface = std::stoi(fields[axes.size()]);
        r.value = cplx(std::stod(fields[axes.size() + 1]), std::stod(fields[axes.size() + 2]));
        max_surface = std::max(max_surface, r.surface);
        rows.push_back(std::move(r));
    }
    if (axes.empty() || max_surface < 0)
        throw std::runtime_error("read_csv: no grid data");
    FieldGrid grid(axes, max_surface + 1);
    for (const auto& r : rows) {
        for (std::size_t d = 0; d < axes.size(); ++d)
            if (r.idx[d] < 0 || r.idx[d] >= axes[d].count)
                throw std::runtime_error("read_csv: node index out of range");
        grid.at(r.surface, grid.flat_index(r.idx)) = r.value;
    }
    return grid;
}

inline FieldGrid read_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    return read_csv(is);
}

} // namespace shgb
