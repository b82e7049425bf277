#pragma once

// Bounded-variable two-phase primal simplex for
//
//   minimize c.w  subject to  A w >= b,  lo <= w <= hi
//
// Rows become equalities A w - s + a = b with surplus s >= 0 and, where the
// starting point violates a row, an artificial a >= 0. Nonbasic variables sit
// at a bound (or at 0 when free). Entering and leaving choices follow Bland's
// smallest-index rule, so pivoting is deterministic and cannot cycle.
// Infinite bounds are accepted; LP-KPI itself always passes a finite box.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"

namespace slicekpi {

struct LpProblem {
    Vector c;   // m
    Matrix A;   // n x m
    Vector b;   // n
    Vector lo;  // m
    Vector hi;  // m

    std::size_t vars() const noexcept { return c.size(); }
    std::size_t rows() const noexcept { return b.size(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline std::string_view to_string(LpStatus s) noexcept {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "?";
}

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Vector w;          // present iff Optimal
    double objective = std::numeric_limits<double>::quiet_NaN();
    Vector ray;        // present iff Unbounded: A r >= 0, c.r < 0, bound-respecting
    std::size_t iterations = 0;
};

inline constexpr double kLpFeasTol = 1e-9;

inline void validate(const LpProblem& p) {
    const std::size_t m = p.vars(), n = p.rows();
    if (p.A.rows() != n || p.A.cols() != m)
        throw DataError("LP: constraint matrix is " + std::to_string(p.A.rows()) + "x" +
                        std::to_string(p.A.cols()) + ", expected " + std::to_string(n) + "x" +
                        std::to_string(m));
    if (p.lo.size() != m || p.hi.size() != m) throw DataError("LP: bound vectors have wrong length");
    for (std::size_t j = 0; j < m; ++j) {
        if (!std::isfinite(p.c[j])) throw DataError("LP: non-finite objective coefficient");
        if (std::isnan(p.lo[j]) || std::isnan(p.hi[j]) || p.lo[j] > p.hi[j])
            throw DataError("LP: invalid bounds for variable " + std::to_string(j));
    }
    for (double v : p.A.data())
        if (!std::isfinite(v)) throw DataError("LP: non-finite constraint coefficient");
    for (double v : p.b)
        if (!std::isfinite(v)) throw DataError("LP: non-finite right-hand side");
}

/// True when any weight sits on a finite box bound.
inline bool bound_active(const LpSolution& s, const LpProblem& p, double tol = 1e-9) {
    if (s.status != LpStatus::Optimal) return false;
    for (std::size_t j = 0; j < s.w.size(); ++j) {
        const double scale = tol * std::max(1.0, std::max(std::abs(p.lo[j]), std::abs(p.hi[j])));
        if (std::isfinite(p.lo[j]) && s.w[j] - p.lo[j] <= scale) return true;
        if (std::isfinite(p.hi[j]) && p.hi[j] - s.w[j] <= scale) return true;
    }
    return false;
}

namespace detail {

class BoundedSimplex {
public:
    explicit BoundedSimplex(const LpProblem& p) : p_(p), m_(p.vars()), n_(p.rows()), N_(m_ + 2 * n_) {
        lo_.assign(N_, 0.0);
        hi_.assign(N_, kInf);
        x_.assign(N_, 0.0);
        basic_row_.assign(N_, kNone);
        for (std::size_t j = 0; j < m_; ++j) {
            lo_[j] = p.lo[j];
            hi_[j] = p.hi[j];
            x_[j] = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(hi_[j]) ? hi_[j] : 0.0);
        }
        D_ = Matrix(n_, N_);
        beta_.assign(n_, 0.0);
        basis_.assign(n_, 0);
        phase1_cost_.assign(N_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double act = 0.0;
            for (std::size_t j = 0; j < m_; ++j) act += p.A(i, j) * x_[j];
            const std::size_t s = m_ + i, a = m_ + n_ + i;
            const bool surplus_ok = act - p.b[i] >= 0.0;
            const double sign = surplus_ok ? -1.0 : 1.0;  // B_ii
            for (std::size_t j = 0; j < m_; ++j) D_(i, j) = p.A(i, j) / sign;
            D_(i, s) = -1.0 / sign;
            D_(i, a) = 1.0 / sign;
            if (surplus_ok) {
                basis_[i] = s;
                beta_[i] = act - p.b[i];
                hi_[a] = 0.0;  // unused artificial, fixed at zero
            } else {
                basis_[i] = a;
                beta_[i] = p.b[i] - act;
                phase1_cost_[a] = 1.0;
            }
            basic_row_[basis_[i]] = i;
        }
    }

    LpSolution run() {
        LpSolution out;
        // Phase 1: drive artificials to zero.
        if (iterate(phase1_cost_, out) == Outcome::Unbounded)
            throw NumericalError("LP: phase 1 reported an unbounded ray");
        double infeas = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            if (basis_[i] >= m_ + n_) infeas += beta_[i];
        for (std::size_t j = m_ + n_; j < N_; ++j)
            if (basic_row_[j] == kNone) infeas += x_[j];
        double bscale = 1.0;
        for (double v : p_.b) bscale = std::max(bscale, std::abs(v));
        if (infeas > kLpFeasTol * bscale) {
            out.status = LpStatus::Infeasible;
            return out;
        }
        for (std::size_t j = m_ + n_; j < N_; ++j) {
            hi_[j] = 0.0;
            if (basic_row_[j] == kNone) x_[j] = 0.0;
        }
        for (std::size_t i = 0; i < n_; ++i)
            if (basis_[i] >= m_ + n_) beta_[i] = 0.0;

        // Phase 2.
        Vector cost(N_, 0.0);
        for (std::size_t j = 0; j < m_; ++j) cost[j] = p_.c[j];
        if (iterate(cost, out) == Outcome::Unbounded) {
            out.status = LpStatus::Unbounded;
            return out;
        }
        refresh_basic_values();
        out.status = LpStatus::Optimal;
        out.w.assign(m_, 0.0);
        for (std::size_t j = 0; j < m_; ++j) {
            double v = basic_row_[j] == kNone ? x_[j] : beta_[basic_row_[j]];
            // snap round-off onto the box
            if (std::isfinite(lo_[j]) && v < lo_[j]) v = lo_[j];
            if (std::isfinite(hi_[j]) && v > hi_[j]) v = hi_[j];
            out.w[j] = v;
        }
        out.objective = dot(p_.c, out.w);
        return out;
    }

private:
    enum class Outcome { Optimal, Unbounded };
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    static constexpr double kPivotTol = 1e-9;
    static constexpr double kMinPivot = 1e-11;

    double reduced_cost(const Vector& cost, std::size_t j) const {
        double d = cost[j];
        for (std::size_t i = 0; i < n_; ++i) d -= cost[basis_[i]] * D_(i, j);
        return d;
    }

    Outcome iterate(const Vector& cost, LpSolution& out) {
        double cscale = 1.0;
        for (double v : cost) cscale = std::max(cscale, std::abs(v));
        const double opt_tol = 1e-9 * cscale;
        const std::size_t max_iter = 1000 + 200 * N_;

        for (std::size_t iter = 0;; ++iter) {
            if (iter > max_iter) throw NumericalError("LP: simplex iteration limit exceeded");

            // Bland: lowest-index improving nonbasic variable.
            std::size_t enter = kNone;
            double dir = 0.0;
            for (std::size_t j = 0; j < N_; ++j) {
                if (basic_row_[j] != kNone || lo_[j] == hi_[j]) continue;
                const double d = reduced_cost(cost, j);
                const bool at_lo = std::isfinite(lo_[j]) && x_[j] == lo_[j];
                const bool at_hi = std::isfinite(hi_[j]) && x_[j] == hi_[j];
                if (at_lo && d < -opt_tol) dir = 1.0;
                else if (at_hi && d > opt_tol) dir = -1.0;
                else if (!at_lo && !at_hi && std::abs(d) > opt_tol) dir = d < 0.0 ? 1.0 : -1.0;
                else continue;
                enter = j;
                break;
            }
            if (enter == kNone) return Outcome::Optimal;
            ++out.iterations;

            // Ratio test; ties go to the lowest variable index.
            double theta = hi_[enter] - lo_[enter];  // bound flip (inf when either side is open)
            if (!std::isfinite(theta)) theta = kInf;
            std::size_t leave_row = kNone;
            for (std::size_t i = 0; i < n_; ++i) {
                const double alpha = dir * D_(i, enter);
                const std::size_t bv = basis_[i];
                double lim = kInf;
                if (alpha > kPivotTol && std::isfinite(lo_[bv]))
                    lim = std::max(0.0, beta_[i] - lo_[bv]) / alpha;
                else if (alpha < -kPivotTol && std::isfinite(hi_[bv]))
                    lim = std::max(0.0, hi_[bv] - beta_[i]) / -alpha;
                else
                    continue;
                if (lim < theta || (lim == theta && leave_row != kNone && bv < basis_[leave_row])) {
                    theta = lim;
                    leave_row = i;
                }
            }

            if (!std::isfinite(theta)) {
                out.ray.assign(m_, 0.0);
                if (enter < m_) out.ray[enter] = dir;
                for (std::size_t i = 0; i < n_; ++i)
                    if (basis_[i] < m_) out.ray[basis_[i]] = -dir * D_(i, enter);
                return Outcome::Unbounded;
            }

            for (std::size_t i = 0; i < n_; ++i) beta_[i] -= theta * dir * D_(i, enter);
            x_[enter] += dir * theta;

            if (leave_row == kNone) {
                // bound flip: land exactly on the opposite bound
                x_[enter] = dir > 0.0 ? hi_[enter] : lo_[enter];
                continue;
            }

            const double piv = D_(leave_row, enter);
            if (std::abs(piv) < kMinPivot)
                throw NumericalError("LP: degenerate pivot (|pivot| = " + std::to_string(std::abs(piv)) + ")");
            const std::size_t leaving = basis_[leave_row];
            const double alpha = dir * piv;
            x_[leaving] = alpha > 0.0 ? lo_[leaving] : hi_[leaving];
            basic_row_[leaving] = kNone;

            const double entering_value = x_[enter];
            auto prow = D_.row(leave_row);
            for (auto& v : prow) v /= piv;
            for (std::size_t i = 0; i < n_; ++i) {
                if (i == leave_row) continue;
                const double f = D_(i, enter);
                if (f == 0.0) continue;
                auto r = D_.row(i);
                for (std::size_t j = 0; j < N_; ++j) r[j] -= f * prow[j];
            }
            basis_[leave_row] = enter;
            basic_row_[enter] = leave_row;
            beta_[leave_row] = entering_value;
        }
    }

    double column(std::size_t i, std::size_t j) const {
        if (j < m_) return p_.A(i, j);
        if (j < m_ + n_) return j - m_ == i ? -1.0 : 0.0;
        return j - m_ - n_ == i ? 1.0 : 0.0;
    }

    /// Recomputes basic values from the original data: solves B x_B = b - N x_N
    /// with partial pivoting plus one refinement step, so the reported vertex
    /// does not inherit round-off accumulated in the tableau.
    void refresh_basic_values() {
        if (n_ == 0) return;
        Vector rhs = p_.b;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < N_; ++j)
                if (basic_row_[j] == kNone && x_[j] != 0.0) rhs[i] -= column(i, j) * x_[j];

        Matrix B(n_, n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t r = 0; r < n_; ++r) B(i, r) = column(i, basis_[r]);
        Matrix LU = B;
        std::vector<std::size_t> perm(n_);
        for (std::size_t i = 0; i < n_; ++i) perm[i] = i;
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t piv = k;
            for (std::size_t i = k + 1; i < n_; ++i)
                if (std::abs(LU(i, k)) > std::abs(LU(piv, k))) piv = i;
            if (std::abs(LU(piv, k)) < kMinPivot) return;  // keep tableau values
            if (piv != k) {
                for (std::size_t j = 0; j < n_; ++j) std::swap(LU(k, j), LU(piv, j));
                std::swap(perm[k], perm[piv]);
            }
            for (std::size_t i = k + 1; i < n_; ++i) {
                LU(i, k) /= LU(k, k);
                for (std::size_t j = k + 1; j < n_; ++j) LU(i, j) -= LU(i, k) * LU(k, j);
            }
        }
        const auto lu_solve = [&](const Vector& r) {
            Vector y(n_);
            for (std::size_t i = 0; i < n_; ++i) {
                double v = r[perm[i]];
                for (std::size_t k = 0; k < i; ++k) v -= LU(i, k) * y[k];
                y[i] = v;
            }
            for (std::size_t i = n_; i-- > 0;) {
                double v = y[i];
                for (std::size_t k = i + 1; k < n_; ++k) v -= LU(i, k) * y[k];
                y[i] = v / LU(i, i);
            }
            return y;
        };
        Vector xb = lu_solve(rhs);
        Vector res(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            long double v = rhs[i];
            for (std::size_t r = 0; r < n_; ++r) v -= static_cast<long double>(B(i, r)) * xb[r];
            res[i] = static_cast<double>(v);
        }
        const Vector dx = lu_solve(res);
        for (std::size_t r = 0; r < n_; ++r) beta_[r] = xb[r] + dx[r];
    }

    const LpProblem& p_;
    std::size_t m_, n_, N_;
    Vector lo_, hi_, x_;
    std::vector<std::size_t> basic_row_;
    Matrix D_;
    Vector beta_;
    std::vector<std::size_t> basis_;
    Vector phase1_cost_;
};

}  // namespace detail

inline LpSolution solve(const LpProblem& p) {
    validate(p);
    detail::BoundedSimplex s(p);
    return s.run();
}

}  // namespace slicekpi
