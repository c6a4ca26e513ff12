#include "volterra/atoms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "volterra/kernels.hpp"
#include "volterra/rng.hpp"

namespace volterra {

namespace {

constexpr double kDedupTol = 1e-12;

bool near(Complex a, Complex b, double tol) { return std::abs(a - b) <= tol; }

bool contains(const std::vector<Pole>& poles, const Pole& p) {
    return std::any_of(poles.begin(), poles.end(), [&](const Pole& q) { return near(q.value(), p.value(), kDedupTol); });
}

bool same_pair(const SecondOrderAtom& a, const SecondOrderAtom& b, double tol) {
    return near(a.pole1.value(), b.pole1.value(), tol) && near(a.pole2.value(), b.pole2.value(), tol);
}

// (p2, p1) in canonical orientation. Swapping the poles transposes the
// kernel but leaves the output z1 * z2 unchanged.
SecondOrderAtom swapped(const SecondOrderAtom& a, bool* conjugated = nullptr) {
    SecondOrderAtom s{a.pole2, a.pole1, a.scale};
    const bool flipped = canonicalize_pair(s.pole1, s.pole2);
    if (conjugated) *conjugated = flipped;
    return s;
}

auto pair_key(const SecondOrderAtom& a) {
    return std::tuple(a.pole1.im(), a.pole2.im(), a.pole1.re(), a.pole2.re());
}

bool same_output(const SecondOrderAtom& a, const SecondOrderAtom& b, double tol) {
    return same_pair(a, b, tol) || same_pair(a, swapped(b), tol);
}

}  // namespace

double PoleGrid::spacing() const {
    const double radial = radial_counts > 1 ? (max_radius - min_radius) / static_cast<double>(radial_counts - 1) : 0.0;
    const double arc =
        angular_counts > 1 ? max_radius * std::numbers::pi / static_cast<double>(angular_counts - 1) : 0.0;
    return std::max(radial, arc);
}

PoleGrid build_grid(std::size_t radial_counts, std::size_t angular_counts, double min_radius, double max_radius) {
    if (radial_counts == 0 || angular_counts == 0) throw std::invalid_argument("grid counts must be at least 1");
    if (!(min_radius > 0.0 && min_radius <= max_radius)) {
        throw std::invalid_argument("grid radii must satisfy 0 < min_radius <= max_radius");
    }
    if (!(max_radius < 1.0)) throw std::invalid_argument("grid max_radius must be < 1 (poles inside the unit circle)");

    PoleGrid grid{{}, radial_counts, angular_counts, min_radius, max_radius};
    for (std::size_t i = 0; i < radial_counts; ++i) {
        const double r = radial_counts == 1
                             ? min_radius
                             : min_radius + (max_radius - min_radius) * static_cast<double>(i) /
                                                static_cast<double>(radial_counts - 1);
        for (std::size_t k = 0; k < angular_counts; ++k) {
            Complex z;
            if (k == 0) {
                z = {r, 0.0};
            } else if (k + 1 == angular_counts) {
                z = {-r, 0.0};
            } else {
                z = std::polar(r, std::numbers::pi * static_cast<double>(k) / static_cast<double>(angular_counts - 1));
            }
            const Pole p(z);
            if (!contains(grid.poles, p)) grid.poles.push_back(p);
        }
    }
    return grid;
}

PoleGrid augment_grid(PoleGrid grid, std::span<const Pole> extra) {
    for (const Pole& p : extra) {
        const Pole up = p.upper();
        if (contains(grid.poles, up)) continue;
        grid.poles.push_back(up);
        grid.min_radius = grid.poles.size() == 1 ? up.modulus() : std::min(grid.min_radius, up.modulus());
        grid.max_radius = std::max(grid.max_radius, up.modulus());
    }
    return grid;
}

std::string PairPolicy::name() const {
    switch (kind) {
        case Kind::kNone: return "none";
        case Kind::kAllPairs: return "all_pairs";
        case Kind::kSampled: return "sampled";
    }
    return "unknown";
}

PairPolicy PairPolicy::parse(const std::string& name, std::size_t count) {
    if (name == "none") return none();
    if (name == "all_pairs") return all_pairs();
    if (name == "sampled") return sampled(count);
    throw std::invalid_argument("unknown pair policy '" + name + "' (expected none, all_pairs or sampled)");
}

bool AtomCatalog::has_imag_part(std::size_t atom) const {
    if (atom < first_atoms.size()) return !first_atoms[atom].pole.is_real();
    const std::size_t j = atom - first_atoms.size();
    if (j < second_atoms.size()) return !(second_atoms[j].pole1.is_real() && second_atoms[j].pole2.is_real());
    return false;
}

std::vector<bool> AtomCatalog::active_columns() const {
    std::vector<bool> active(n_columns(), true);
    for (std::size_t j = 0; j < n_atoms(); ++j) active[2 * j + 1] = has_imag_part(j);
    return active;
}

std::vector<SecondOrderAtom> canonical_pairs(const PoleGrid& grid, double scale_beta) {
    std::vector<Pole> disk;
    disk.reserve(2 * grid.poles.size());
    for (const Pole& p : grid.poles) {
        disk.push_back(p);
        if (!p.is_real()) disk.push_back(p.conj());
    }
    std::vector<SecondOrderAtom> pairs;
    for (const Pole& a : disk) {
        for (const Pole& b : disk) {
            Pole p1 = a;
            Pole p2 = b;
            if (canonicalize_pair(p1, p2)) continue;
            const SecondOrderAtom atom{a, b, scale_beta};
            // One representative per output-equivalence class.
            if (pair_key(swapped(atom)) > pair_key(atom)) continue;
            pairs.push_back(atom);
        }
    }
    return pairs;
}

AtomCatalog build_catalog(const PoleGrid& grid, PairPolicy policy, double scale_alpha, double scale_beta,
                          std::uint64_t seed) {
    if (grid.poles.empty()) throw std::invalid_argument("cannot build a catalog from an empty grid");
    if (!std::isfinite(scale_alpha) || scale_alpha == 0.0 || !std::isfinite(scale_beta) || scale_beta == 0.0) {
        throw std::invalid_argument("atom scales must be finite and nonzero");
    }
    AtomCatalog catalog;
    catalog.scale_alpha = scale_alpha;
    catalog.scale_beta = scale_beta;
    catalog.policy = policy;
    catalog.seed = seed;
    for (const Pole& p : grid.poles) catalog.first_atoms.push_back({p, scale_alpha});

    if (policy.kind == PairPolicy::Kind::kNone) return catalog;
    std::vector<SecondOrderAtom> universe = canonical_pairs(grid, scale_beta);
    if (policy.kind == PairPolicy::Kind::kAllPairs) {
        catalog.second_atoms = std::move(universe);
        return catalog;
    }
    if (policy.count > universe.size()) {
        throw std::invalid_argument("sampled(" + std::to_string(policy.count) + ") exceeds the " +
                                    std::to_string(universe.size()) + " available pole pairs");
    }
    // Partial Fisher-Yates over indices, then restore universe order.
    std::vector<std::size_t> index(universe.size());
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
    Rng rng(seed);
    for (std::size_t i = 0; i < policy.count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(index.size() - i));
        std::swap(index[i], index[j]);
    }
    index.resize(policy.count);
    std::sort(index.begin(), index.end());
    catalog.second_atoms.reserve(index.size());
    for (std::size_t i : index) catalog.second_atoms.push_back(universe[i]);
    return catalog;
}

AtomCatalog augment_catalog(AtomCatalog catalog, std::span<const SecondOrderAtom> pairs) {
    for (SecondOrderAtom atom : pairs) {
        canonicalize_pair(atom.pole1, atom.pole2);
        const bool present = std::any_of(catalog.second_atoms.begin(), catalog.second_atoms.end(),
                                         [&](const SecondOrderAtom& a) { return same_output(a, atom, kDedupTol); });
        if (!present) catalog.second_atoms.push_back(atom);
    }
    return catalog;
}

std::vector<ColumnGroup> column_groups(const AtomCatalog& catalog) {
    std::vector<ColumnGroup> groups;
    groups.reserve(catalog.n_groups());
    for (std::size_t j = 0; j < catalog.n_atoms(); ++j) {
        groups.push_back({2 * j, catalog.has_imag_part(j) ? std::size_t{2} : std::size_t{1}});
    }
    groups.push_back({catalog.constant_column(), 1});
    return groups;
}

Dictionary::Dictionary(AtomCatalog catalog, std::size_t memory) : catalog_(std::move(catalog)), memory_(memory) {
    if (catalog_.n_atoms() == 0) throw std::invalid_argument("dictionary needs a nonempty catalog");
    if (memory_ == 0) throw std::invalid_argument("kernel memory L must be at least 1");
}

Eigen::MatrixXd Dictionary::kernel_matrix() const {
    const auto mem = static_cast<Eigen::Index>(memory_);
    const std::size_t n_first = catalog_.first_atoms.size();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(stacked_size(memory_)),
                                              static_cast<Eigen::Index>(n_columns()));
    for (std::size_t j = 0; j < catalog_.n_atoms(); ++j) {
        const auto re = static_cast<Eigen::Index>(2 * j);
        if (j < n_first) {
            const Eigen::VectorXcd a = eval_first_order_kernel(catalog_.first_atoms[j], memory_);
            d.col(re).segment(1, mem) = 2.0 * a.real();
            d.col(re + 1).segment(1, mem) = -2.0 * a.imag();
        } else {
            const Eigen::MatrixXcd a = eval_second_order_kernel(catalog_.second_atoms[j - n_first], memory_);
            for (Eigen::Index k1 = 0; k1 < mem; ++k1) {
                for (Eigen::Index k2 = 0; k2 < mem; ++k2) {
                    d(1 + mem + k1 * mem + k2, re) = 2.0 * a(k1, k2).real();
                    d(1 + mem + k1 * mem + k2, re + 1) = -2.0 * a(k1, k2).imag();
                }
            }
        }
    }
    d(0, static_cast<Eigen::Index>(catalog_.constant_column())) = 1.0;
    return d;
}

Eigen::MatrixXd Dictionary::output_matrix(const Eigen::VectorXd& input) const {
    std::vector<Complex> poles;
    const auto index_of = [&poles](const Pole& p) {
        const auto it = std::find(poles.begin(), poles.end(), p.value());
        if (it != poles.end()) return static_cast<std::size_t>(it - poles.begin());
        poles.push_back(p.value());
        return poles.size() - 1;
    };
    std::vector<kernels::AtomSource> sources;
    sources.reserve(catalog_.n_atoms());
    for (const auto& a : catalog_.first_atoms) sources.push_back({index_of(a.pole), kernels::AtomSource::kNone, a.scale});
    for (const auto& a : catalog_.second_atoms) sources.push_back({index_of(a.pole1), index_of(a.pole2), a.scale});
    const Eigen::MatrixXcd z = kernels::parallel::filter_responses(input, poles, memory_);
    return kernels::parallel::atom_outputs(z, sources);
}

Dictionary build_dictionary(AtomCatalog catalog, std::size_t memory) { return {std::move(catalog), memory}; }

Eigen::VectorXd real_coeffs(std::span<const Complex> coeffs, double h0, const AtomCatalog& catalog) {
    if (coeffs.size() != catalog.n_atoms()) {
        throw std::invalid_argument("expected " + std::to_string(catalog.n_atoms()) + " complex coefficients, got " +
                                    std::to_string(coeffs.size()));
    }
    Eigen::VectorXd w(static_cast<Eigen::Index>(catalog.n_columns()));
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        w(static_cast<Eigen::Index>(2 * j)) = coeffs[j].real();
        w(static_cast<Eigen::Index>(2 * j + 1)) = catalog.has_imag_part(j) ? coeffs[j].imag() : 0.0;
    }
    w(static_cast<Eigen::Index>(catalog.constant_column())) = h0;
    return w;
}

AtomicModel complex_coeffs(const Eigen::VectorXd& w, const AtomCatalog& catalog, double threshold) {
    if (static_cast<std::size_t>(w.size()) != catalog.n_columns()) {
        throw std::invalid_argument("expected " + std::to_string(catalog.n_columns()) + " real coefficients, got " +
                                    std::to_string(w.size()));
    }
    AtomicModel model;
    model.h0 = w(static_cast<Eigen::Index>(catalog.constant_column()));
    const std::size_t n_first = catalog.first_atoms.size();
    for (std::size_t j = 0; j < catalog.n_atoms(); ++j) {
        const double u = w(static_cast<Eigen::Index>(2 * j));
        const double v = catalog.has_imag_part(j) ? w(static_cast<Eigen::Index>(2 * j + 1)) : 0.0;
        if (std::abs(u) <= threshold && std::abs(v) <= threshold) continue;
        if (j < n_first) {
            model.first_order.push_back({catalog.first_atoms[j], {u, v}});
        } else {
            model.second_order.push_back({catalog.second_atoms[j - n_first], {u, v}});
        }
    }
    return model;
}

Eigen::VectorXd catalog_coeffs(const AtomicModel& model, const AtomCatalog& catalog, double tol) {
    std::vector<Complex> c(catalog.n_atoms(), Complex{});
    const std::size_t n_first = catalog.first_atoms.size();
    for (const auto& term : model.first_order) {
        const Complex p = term.atom.pole.value();
        bool found = false;
        for (std::size_t j = 0; j < n_first && !found; ++j) {
            const FirstOrderAtom& a = catalog.first_atoms[j];
            const double ratio = term.atom.scale / a.scale;
            if (near(a.pole.value(), p, tol)) {
                c[j] += term.coeff * ratio;
                found = true;
            } else if (near(a.pole.value(), std::conj(p), tol)) {
                c[j] += std::conj(term.coeff) * ratio;
                found = true;
            }
        }
        if (!found) throw std::invalid_argument("first-order atom is not in the catalog");
    }
    for (const auto& term : model.second_order) {
        SecondOrderAtom atom = term.atom;
        Complex coeff = term.coeff;
        if (canonicalize_pair(atom.pole1, atom.pole2)) coeff = std::conj(coeff);
        bool found = false;
        for (std::size_t j = 0; j < catalog.second_atoms.size() && !found; ++j) {
            // Catalog pairs are stored as canonical orbit representatives.
            const SecondOrderAtom& a = catalog.second_atoms[j];
            bool conjugated = false;
            const SecondOrderAtom alt = swapped(atom, &conjugated);
            if (same_pair(a, atom, tol)) {
                c[n_first + j] += coeff * (atom.scale / a.scale);
                found = true;
            } else if (same_pair(a, alt, tol)) {
                c[n_first + j] += (conjugated ? std::conj(coeff) : coeff) * (atom.scale / a.scale);
                found = true;
            }
        }
        if (!found) throw std::invalid_argument("second-order atom is not in the catalog");
    }
    return real_coeffs(c, model.h0, catalog);
}

double atomic_l1_cost(const Eigen::VectorXd& w, const AtomCatalog& catalog) {
    if (static_cast<std::size_t>(w.size()) != catalog.n_columns()) {
        throw std::invalid_argument("coefficient vector length does not match the catalog");
    }
    double cost = 0.0;
    for (const ColumnGroup& g : column_groups(catalog)) {
        const auto first = static_cast<Eigen::Index>(g.first);
        cost += g.size == 2 ? std::hypot(w(first), w(first + 1)) : std::abs(w(first));
    }
    return cost;
}

}  // namespace volterra
