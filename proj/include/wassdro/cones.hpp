#pragma once

#include "wassdro/symmetric.hpp"
#include "wassdro/types.hpp"

#include <vector>

namespace wassdro::conic {

enum class ConeKind { Zero, NonNeg, SecondOrder, Psd };

/// One block of the cone product. For Psd blocks `dim` is the matrix side;
/// the block occupies svec_size(dim) rows in the owning program.
struct ConeBlock {
  ConeKind kind = ConeKind::Zero;
  Index dim = 0;

  Index rows() const { return kind == ConeKind::Psd ? svec_size(dim) : dim; }

  /// Barrier degree: NonNeg counts each coordinate, SecondOrder counts 1,
  /// Psd counts the side, Zero counts 0.
  Index degree() const {
    switch (kind) {
      case ConeKind::Zero: return 0;
      case ConeKind::NonNeg: return dim;
      case ConeKind::SecondOrder: return 1;
      case ConeKind::Psd: return dim;
    }
    return 0;
  }
};

/// Ordered list of cone blocks describing the slack space of a program.
struct ConeSpec {
  std::vector<ConeBlock> blocks;

  Index total_rows() const {
    Index n = 0;
    for (const auto& b : blocks) n += b.rows();
    return n;
  }
  Index total_degree() const {
    Index n = 0;
    for (const auto& b : blocks) n += b.degree();
    return n;
  }
  bool has_kind(ConeKind k) const {
    for (const auto& b : blocks)
      if (b.kind == k) return true;
    return false;
  }
  void validate() const {
    for (const auto& b : blocks) {
      if (b.dim < 0) throw precondition_error("cone block with negative dimension");
      if (b.kind == ConeKind::Psd && b.dim < 1)
        throw precondition_error("empty PSD cone block");
      if (b.kind == ConeKind::SecondOrder && b.dim < 1)
        throw precondition_error("empty second-order cone block");
    }
  }
};

inline const char* cone_name(ConeKind k) {
  switch (k) {
    case ConeKind::Zero: return "zero";
    case ConeKind::NonNeg: return "nonneg";
    case ConeKind::SecondOrder: return "soc";
    case ConeKind::Psd: return "psd";
  }
  return "?";
}

}  // namespace wassdro::conic
