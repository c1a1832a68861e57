#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mirrorsym {

// Flat parameter vector. All models and optimizers work on this type; the
// block structure lives in ParamLayout.
using ParamVector = std::vector<double>;

struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;
};

// Named, contiguous, disjoint blocks covering [0, dim). Validated on
// construction; lookup by name throws on a miss.
class ParamLayout {
public:
    ParamLayout() = default;
    explicit ParamLayout(std::vector<ParamBlock> blocks);

    std::size_t dim() const { return dim_; }
    const std::vector<ParamBlock>& blocks() const { return blocks_; }
    const ParamBlock& block(const std::string& name) const;
    bool has_block(const std::string& name) const;

private:
    std::vector<ParamBlock> blocks_;
    std::size_t dim_ = 0;
};

double dot(const ParamVector& a, const ParamVector& b);
double norm2(const ParamVector& a);
double norm_inf(const ParamVector& a);
double sq_norm(const ParamVector& a);
// y += alpha * x
void axpy(double alpha, const ParamVector& x, ParamVector& y);
ParamVector scaled(double alpha, const ParamVector& x);
bool all_finite(const ParamVector& a);

}  // namespace mirrorsym
