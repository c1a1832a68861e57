#include "mirrorsym/param.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mirrorsym {

ParamLayout::ParamLayout(std::vector<ParamBlock> blocks) : blocks_(std::move(blocks)) {
    std::size_t expect = 0;
    for (const auto& b : blocks_) {
        if (b.offset != expect)
            throw std::invalid_argument("ParamLayout: blocks must be contiguous from 0");
        if (b.length == 0)
            throw std::invalid_argument("ParamLayout: empty block '" + b.name + "'");
        for (const auto& other : blocks_)
            if (&other != &b && other.name == b.name)
                throw std::invalid_argument("ParamLayout: duplicate block '" + b.name + "'");
        expect += b.length;
    }
    dim_ = expect;
}

const ParamBlock& ParamLayout::block(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name) return b;
    throw std::invalid_argument("ParamLayout: no block named '" + name + "'");
}

bool ParamLayout::has_block(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name) return true;
    return false;
}

double dot(const ParamVector& a, const ParamVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sq_norm(const ParamVector& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return s;
}

double norm2(const ParamVector& a) { return std::sqrt(sq_norm(a)); }

double norm_inf(const ParamVector& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

void axpy(double alpha, const ParamVector& x, ParamVector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

ParamVector scaled(double alpha, const ParamVector& x) {
    ParamVector r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i];
    return r;
}

bool all_finite(const ParamVector& a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace mirrorsym
