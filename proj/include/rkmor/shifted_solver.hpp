#pragma once

#include "rkmor/system.hpp"
#include "rkmor/types.hpp"

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include <atomic>
#include <list>
#include <memory>
#include <mutex>

namespace rkmor {

/// Identifies a cached factorization: the shift (the product omega*mu) plus a
/// tag for the matrix it belongs to. Keys compare equal when the shifts agree
/// to 1e-14 relative and the tags match.
struct ShiftKey {
    Complex shift{};
    std::uint64_t matrix_tag = 0;

    bool operator==(const ShiftKey& other) const {
        if (matrix_tag != other.matrix_tag) return false;
        return std::abs(shift - other.shift) <= 1e-14 * std::max(1.0, std::abs(shift));
    }
};

struct CacheStats {
    int entries = 0;
    long hits = 0;
    long misses = 0;
};

/// Solves families of shifted systems (I - shift*A) X = RHS for a fixed A (or
/// A^T), caching direct factorizations per shift with LRU eviction. For real
/// A a cached factorization at conj(shift) is reused via conjugation. Safe to
/// share across threads.
class ShiftedSolver {
public:
    /// Binds the solver to the A (or A^T, per kind) of a system. The system
    /// must outlive the solver.
    ShiftedSolver(const LtiSystem& sys, GramianKind kind, int capacity = 32)
        : sys_(&sys),
          transposed_(kind == GramianKind::Observability),
          capacity_(capacity),
          tag_(next_tag()) {
        if (capacity_ < 1) capacity_ = 1;
    }

    Index n() const { return sys_->n(); }
    std::uint64_t matrix_tag() const { return tag_; }

    ShiftKey key_for(Complex shift) const { return ShiftKey{shift, tag_}; }

    /// x with (I - shift*A) x = rhs, per column.
    ComplexMatrix solve(Complex shift, const ComplexMatrix& rhs) {
        if (rhs.rows() != sys_->n()) throw DimensionMismatch("shifted solve: rhs row count != n");
        if (shift == Complex(0.0, 0.0)) return rhs;  // identity system

        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (Entry* e = find(shift)) {
                ++hits_;
                return e->factor->solve(rhs);
            }
            // conjugate-pair reuse: for real A, (I - conj(s) A) x = rhs is
            // solved by conjugating a solve with the cached factor at s
            if (Entry* e = find(std::conj(shift))) {
                ++hits_;
                return e->factor->solve(rhs.conjugate()).conjugate();
            }
            ++misses_;
        }

        auto factor = std::make_shared<Factor>(*sys_, transposed_, shift);

        std::lock_guard<std::mutex> lock(mutex_);
        entries_.push_front(Entry{shift, factor});
        while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_back();
        return factor->solve(rhs);
    }

    CacheStats cache_stats() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return CacheStats{static_cast<int>(entries_.size()), hits_, misses_};
    }

private:
    struct Factor {
        Factor(const LtiSystem& sys, bool transposed, Complex shift) {
            if (sys.is_sparse()) {
                Eigen::SparseMatrix<Complex> m;
                if (transposed)
                    m = SparseRealMatrix(sys.sparse_a().transpose()).cast<Complex>();
                else
                    m = sys.sparse_a().cast<Complex>();
                m *= -shift;
                Eigen::SparseMatrix<Complex> id(sys.n(), sys.n());
                id.setIdentity();
                m += id;
                sparse = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<Complex>>>();
                sparse->compute(m);
                if (sparse->info() != Eigen::Success) throw SingularShiftedOperator(shift);
            } else {
                ComplexMatrix m = transposed ? ComplexMatrix(sys.dense_a().transpose().cast<Complex>())
                                             : ComplexMatrix(sys.dense_a().cast<Complex>());
                m *= -shift;
                m.diagonal().array() += 1.0;
                auto lu = std::make_unique<Eigen::FullPivLU<ComplexMatrix>>(m);
                if (!lu->isInvertible()) throw SingularShiftedOperator(shift);
                dense = std::move(lu);
            }
        }

        ComplexMatrix solve(const ComplexMatrix& rhs) const {
            if (dense) return dense->solve(rhs);
            return sparse->solve(rhs);
        }

        std::unique_ptr<Eigen::FullPivLU<ComplexMatrix>> dense;
        std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<Complex>>> sparse;
    };

    struct Entry {
        Complex shift;
        std::shared_ptr<Factor> factor;
    };

    // linear scan; capacity is small and equality is tolerance-based
    Entry* find(Complex shift) {
        ShiftKey wanted{shift, tag_};
        for (auto it = entries_.begin(); it != entries_.end(); ++it) {
            if (ShiftKey{it->shift, tag_} == wanted) {
                entries_.splice(entries_.begin(), entries_, it);  // move to front (MRU)
                return &entries_.front();
            }
        }
        return nullptr;
    }

    static std::uint64_t next_tag() {
        static std::atomic<std::uint64_t> counter{1};
        return counter.fetch_add(1);
    }

    const LtiSystem* sys_;
    bool transposed_;
    int capacity_;
    std::uint64_t tag_;

    mutable std::mutex mutex_;
    std::list<Entry> entries_;
    long hits_ = 0;
    long misses_ = 0;
};

}  // namespace rkmor
