#pragma once

#include <sgca/linalg.hpp>

#include <numeric>
#include <optional>
#include <vector>

namespace sgca {

using linalg::SymMatrix;

/// Sizes p_1, ..., p_k of the k datasets stacked into one p-vector.
class BlockPartition
{
public:
    BlockPartition() = default;

    explicit BlockPartition(std::vector<Index> sizes) : sizes_(std::move(sizes))
    {
        if (sizes_.empty()) {
            throw parameter_error("BlockPartition: at least one block required");
        }
        offsets_.reserve(sizes_.size() + 1);
        offsets_.push_back(0);
        for (Index s : sizes_) {
            if (s < 1) throw parameter_error("BlockPartition: block sizes must be >= 1");
            offsets_.push_back(offsets_.back() + s);
        }
    }

    /// k = p blocks of size one (correlation-matrix PCA).
    static BlockPartition singletons(Index p)
    {
        return BlockPartition(std::vector<Index>(static_cast<std::size_t>(p), 1));
    }

    Index count() const noexcept { return static_cast<Index>(sizes_.size()); }
    Index total() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
    Index size(Index i) const { return sizes_.at(static_cast<std::size_t>(i)); }
    Index offset(Index i) const { return offsets_.at(static_cast<std::size_t>(i)); }
    const std::vector<Index>& sizes() const noexcept { return sizes_; }

    /// Block index containing coordinate j.
    Index block_of(Index j) const
    {
        auto it = std::upper_bound(offsets_.begin(), offsets_.end(), j);
        return static_cast<Index>(it - offsets_.begin()) - 1;
    }

    bool operator==(const BlockPartition&) const = default;

private:
    std::vector<Index> sizes_;
    std::vector<Index> offsets_;
};

/// Copy of `m` with every off-diagonal block set to zero.
inline SymMatrix block_diagonal(const SymMatrix& m, const BlockPartition& part)
{
    if (part.total() != m.dim()) {
        throw parameter_error("block_diagonal: partition does not match dimension");
    }
    Matrix out = Matrix::Zero(m.dim(), m.dim());
    for (Index b = 0; b < part.count(); ++b) {
        const Index o = part.offset(b), s = part.size(b);
        out.block(o, o, s, s) = m.mat().block(o, o, s, s);
    }
    return SymMatrix::symmetrized(out);
}

/// Joint covariance and its block-diagonal part. sigma0 is always derived
/// from sigma, never supplied independently.
class CovariancePair
{
public:
    CovariancePair() = default;

    CovariancePair(SymMatrix sigma, BlockPartition partition)
        : sigma_(std::move(sigma)), partition_(std::move(partition))
    {
        sigma0_ = block_diagonal(sigma_, partition_);
    }

    const SymMatrix& sigma() const noexcept { return sigma_; }
    const SymMatrix& sigma0() const noexcept { return sigma0_; }
    const BlockPartition& partition() const noexcept { return partition_; }
    Index dim() const noexcept { return sigma_.dim(); }

    /// Diagonal block i of sigma0.
    Matrix block(Index i) const
    {
        const Index o = partition_.offset(i), s = partition_.size(i);
        return sigma0_.mat().block(o, o, s, s);
    }

private:
    SymMatrix sigma_;
    SymMatrix sigma0_;
    BlockPartition partition_;
};

/// p x r loading matrix with optional block structure.
struct LoadingMatrix
{
    Matrix entries;
    std::optional<BlockPartition> partition;

    LoadingMatrix() = default;
    explicit LoadingMatrix(Matrix m, std::optional<BlockPartition> part = std::nullopt)
        : entries(std::move(m)), partition(std::move(part))
    {
        if (!entries.allFinite()) {
            throw numerical_error("LoadingMatrix: non-finite entries");
        }
    }

    Index rows() const noexcept { return entries.rows(); }
    Index cols() const noexcept { return entries.cols(); }

    /// Indices of rows with nonzero l2 norm.
    std::vector<Index> row_support() const
    {
        std::vector<Index> s;
        for (Index i = 0; i < entries.rows(); ++i) {
            if (entries.row(i).squaredNorm() > 0.0) s.push_back(i);
        }
        return s;
    }

    /// Rows belonging to dataset i.
    Matrix block(Index i) const
    {
        if (!partition) throw parameter_error("LoadingMatrix: no partition attached");
        return entries.middleRows(partition->offset(i), partition->size(i));
    }
};

} // namespace sgca
