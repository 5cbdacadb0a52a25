#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emuchain {

struct Dimension {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    bool decision = false;  // decision variable d rather than uncertain input x

    bool operator==(const Dimension&) const = default;
};

// Box-shaped input domain. Immutable once constructed; the constructor
// enforces lower < upper and unique names.
class InputSpace {
public:
    InputSpace() = default;
    explicit InputSpace(std::vector<Dimension> dims);

    std::size_t size() const noexcept { return dims_.size(); }
    const std::vector<Dimension>& dims() const noexcept { return dims_; }
    const Dimension& dim(std::size_t i) const { return dims_.at(i); }

    std::optional<std::size_t> index_of(const std::string& name) const;
    std::vector<std::string> names() const;
    std::vector<std::string> decision_names() const;
    std::vector<std::string> parameter_names() const;

    bool contains(std::span<const double> point) const;

    // Affine map of each coordinate onto [-1, 1] and back.
    std::vector<double> to_unit(std::span<const double> point) const;
    std::vector<double> from_unit(std::span<const double> unit) const;

    // Restriction to the named dimensions, in the given order.
    InputSpace subspace(const std::vector<std::string>& names) const;

    bool operator==(const InputSpace&) const = default;

private:
    std::vector<Dimension> dims_;
};

}  // namespace emuchain
