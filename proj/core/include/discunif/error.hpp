#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace discunif
{

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text; carries the byte offset of the offending token.
class ParseError : public Error
{
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " at offset " + std::to_string(offset)), offset_{offset}
    {
    }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Expression evaluated outside its domain (log/sqrt of a negative, x/0, overflow).
class DomainError : public Error
{
public:
    using Error::Error;
};

/// Invalid argument or precondition violation (resolution, weights, parameters).
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// A metric failed positive definiteness at a vertex.
class PositivityError : public Error
{
public:
    PositivityError(const std::string& msg, std::size_t vertex)
        : Error(msg + " (vertex " + std::to_string(vertex) + ")"), vertex_{vertex}
    {
    }
    std::size_t vertex() const noexcept { return vertex_; }

private:
    std::size_t vertex_;
};

/// |mu| too close to 1 for the requested operation.
class BoundError : public Error
{
public:
    using Error::Error;
};

/// Degenerate triangle or otherwise unusable mesh.
class MeshError : public Error
{
public:
    using Error::Error;
};

/// A query point could not be located in the triangulation.
class PointLocationError : public Error
{
public:
    using Error::Error;
};

/// A map failed the orientation (positive Jacobian) requirement.
class JacobianError : public Error
{
public:
    JacobianError(const std::string& msg, std::size_t triangle, double value)
        : Error(msg + " (triangle " + std::to_string(triangle) + ", jacobian " + std::to_string(value) + ")"),
          triangle_{triangle}, value_{value}
    {
    }
    std::size_t triangle() const noexcept { return triangle_; }
    double value() const noexcept { return value_; }

private:
    std::size_t triangle_;
    double value_;
};

}  // namespace discunif
