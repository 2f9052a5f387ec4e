#include "wassdro/conic_io.hpp"

#include "wassdro/symmetric.hpp"

#include <cinttypes>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

namespace wassdro::conic {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct SvecEntry {
  Index i, j;     // matrix position, i >= j
  double unscale;  // multiply svec coefficient by this to get the entry
};

// matrix position of each svec row of a side-k block
std::vector<SvecEntry> svec_layout(Index k) {
  std::vector<SvecEntry> out;
  out.reserve(svec_size(k));
  for (Index j = 0; j < k; ++j) {
    out.push_back({j, j, 1.0});
    for (Index i = j + 1; i < k; ++i) out.push_back({i, j, 1.0 / kSqrt2});
  }
  return out;
}

const char* cbf_domain(ConeKind k) {
  switch (k) {
    case ConeKind::Zero: return "L=";
    case ConeKind::NonNeg: return "L+";
    case ConeKind::SecondOrder: return "Q";
    default: return nullptr;
  }
}

struct ColumnView {
  // constraint matrix by row: (row -> list of (var, value))
  std::vector<std::vector<std::pair<Index, double>>> rows;
  explicit ColumnView(const ConicProgram& p) : rows(p.num_rows()) {
    for (Index c = 0; c < p.constraint.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(p.constraint, c); it; ++it)
        rows[it.row()].emplace_back(it.col(), it.value());
  }
};

std::string export_cbf(const ConicProgram& p) {
  ColumnView by_row(p);
  std::ostringstream os;
  os << "VER\n1\n\n";
  os << "OBJSENSE\nMIN\n\n";
  os << "VAR\n" << p.num_vars << " 1\nF " << p.num_vars << "\n\n";

  // scalar cone blocks in program order, PSD blocks separately
  std::vector<size_t> scalar_blocks, psd_blocks;
  for (size_t b = 0; b < p.cones.blocks.size(); ++b)
    (p.cones.blocks[b].kind == ConeKind::Psd ? psd_blocks : scalar_blocks)
        .push_back(b);

  std::vector<Index> offsets(p.cones.blocks.size());
  {
    Index off = 0;
    for (size_t b = 0; b < p.cones.blocks.size(); ++b) {
      offsets[b] = off;
      off += p.cones.blocks[b].rows();
    }
  }

  Index n_scalar = 0;
  for (size_t b : scalar_blocks) n_scalar += p.cones.blocks[b].dim;
  if (n_scalar > 0) {
    os << "CON\n" << n_scalar << " " << scalar_blocks.size() << "\n";
    for (size_t b : scalar_blocks)
      os << cbf_domain(p.cones.blocks[b].kind) << " " << p.cones.blocks[b].dim
         << "\n";
    os << "\n";
  }
  if (!psd_blocks.empty()) {
    os << "PSDCON\n" << psd_blocks.size() << "\n";
    for (size_t b : psd_blocks) os << p.cones.blocks[b].dim << "\n";
    os << "\n";
  }

  std::ostringstream obja;
  Index nnz_obj = 0;
  for (Index j = 0; j < p.num_vars; ++j)
    if (p.objective[j] != 0.0) {
      obja << j << " " << fmt(p.objective[j]) << "\n";
      ++nnz_obj;
    }
  if (nnz_obj > 0) os << "OBJACOORD\n" << nnz_obj << "\n" << obja.str() << "\n";
  if (p.objective_offset != 0.0)
    os << "OBJBCOORD\n" << fmt(p.objective_offset) << "\n\n";

  // scalar constraints: g_i = b_i - sum_j A_ij z_j in domain
  std::ostringstream acoord, bcoord;
  Index nnz_a = 0, nnz_b = 0;
  {
    Index row_out = 0;
    for (size_t b : scalar_blocks) {
      const Index off = offsets[b];
      for (Index i = 0; i < p.cones.blocks[b].dim; ++i, ++row_out) {
        for (const auto& [var, val] : by_row.rows[off + i]) {
          acoord << row_out << " " << var << " " << fmt(-val) << "\n";
          ++nnz_a;
        }
        if (p.rhs[off + i] != 0.0) {
          bcoord << row_out << " " << fmt(p.rhs[off + i]) << "\n";
          ++nnz_b;
        }
      }
    }
  }
  if (nnz_a > 0) os << "ACOORD\n" << nnz_a << "\n" << acoord.str() << "\n";
  if (nnz_b > 0) os << "BCOORD\n" << nnz_b << "\n" << bcoord.str() << "\n";

  std::ostringstream hcoord, dcoord;
  Index nnz_h = 0, nnz_d = 0;
  for (size_t pi = 0; pi < psd_blocks.size(); ++pi) {
    const size_t b = psd_blocks[pi];
    const Index off = offsets[b];
    const auto layout = svec_layout(p.cones.blocks[b].dim);
    for (size_t e = 0; e < layout.size(); ++e) {
      const Index row = off + static_cast<Index>(e);
      for (const auto& [var, val] : by_row.rows[row]) {
        hcoord << pi << " " << var << " " << layout[e].i << " " << layout[e].j
               << " " << fmt(-val * layout[e].unscale) << "\n";
        ++nnz_h;
      }
      if (p.rhs[row] != 0.0) {
        dcoord << pi << " " << layout[e].i << " " << layout[e].j << " "
               << fmt(p.rhs[row] * layout[e].unscale) << "\n";
        ++nnz_d;
      }
    }
  }
  if (nnz_h > 0) os << "HCOORD\n" << nnz_h << "\n" << hcoord.str() << "\n";
  if (nnz_d > 0) os << "DCOORD\n" << nnz_d << "\n" << dcoord.str() << "\n";
  return os.str();
}

std::string export_sdpa(const ConicProgram& p) {
  for (size_t b = 0; b < p.cones.blocks.size(); ++b)
    if (p.cones.blocks[b].kind == ConeKind::SecondOrder)
      throw precondition_error(
          "SDPA sparse cannot represent second-order cone block '" +
          (b < p.row_names.size() ? p.row_names[b] : std::to_string(b)) + "'");

  ColumnView by_row(p);
  std::ostringstream os;
  os << p.num_vars << "\n";

  struct OutBlock {
    size_t src;
    Index size;  // negative: diagonal
  };
  std::vector<OutBlock> out_blocks;
  std::vector<Index> offsets(p.cones.blocks.size());
  Index off = 0;
  for (size_t b = 0; b < p.cones.blocks.size(); ++b) {
    offsets[b] = off;
    const auto& cb = p.cones.blocks[b];
    off += cb.rows();
    if (cb.dim == 0) continue;
    switch (cb.kind) {
      case ConeKind::NonNeg: out_blocks.push_back({b, -cb.dim}); break;
      case ConeKind::Zero: out_blocks.push_back({b, -2 * cb.dim}); break;
      case ConeKind::Psd: out_blocks.push_back({b, cb.dim}); break;
      default: break;
    }
  }
  os << out_blocks.size() << "\n";
  for (size_t i = 0; i < out_blocks.size(); ++i)
    os << out_blocks[i].size << (i + 1 < out_blocks.size() ? " " : "");
  os << "\n";
  for (Index j = 0; j < p.num_vars; ++j)
    os << fmt(p.objective[j]) << (j + 1 < p.num_vars ? " " : "");
  os << "\n";

  // entries: matno blkno i j value, 1-based; X = sum z_j F_j - F0 >= 0
  // with X = smat(b - A z) per block: F_j entry = -A, F0 entry = -b.
  auto emit = [&](std::ostringstream& o, Index matno, size_t blkno1, Index i,
                  Index j, double v) {
    if (v != 0.0)
      o << matno << " " << blkno1 << " " << i << " " << j << " " << fmt(v)
        << "\n";
  };
  std::ostringstream body;
  for (size_t ob = 0; ob < out_blocks.size(); ++ob) {
    const auto& cb = p.cones.blocks[out_blocks[ob].src];
    const Index boff = offsets[out_blocks[ob].src];
    if (cb.kind == ConeKind::Psd) {
      const auto layout = svec_layout(cb.dim);
      for (size_t e = 0; e < layout.size(); ++e) {
        const Index row = boff + static_cast<Index>(e);
        emit(body, 0, ob + 1, layout[e].j + 1, layout[e].i + 1,
             -p.rhs[row] * layout[e].unscale);
        for (const auto& [var, val] : by_row.rows[row])
          emit(body, var + 1, ob + 1, layout[e].j + 1, layout[e].i + 1,
               -val * layout[e].unscale);
      }
    } else {
      const bool two_sided = cb.kind == ConeKind::Zero;
      for (Index i = 0; i < cb.dim; ++i) {
        const Index row = boff + i;
        emit(body, 0, ob + 1, i + 1, i + 1, -p.rhs[row]);
        for (const auto& [var, val] : by_row.rows[row])
          emit(body, var + 1, ob + 1, i + 1, i + 1, -val);
        if (two_sided) {
          const Index i2 = cb.dim + i;
          emit(body, 0, ob + 1, i2 + 1, i2 + 1, p.rhs[row]);
          for (const auto& [var, val] : by_row.rows[row])
            emit(body, var + 1, ob + 1, i2 + 1, i2 + 1, val);
        }
      }
    }
  }
  os << body.str();
  return os.str();
}

// ---------------------------------------------------------------------------

std::vector<std::string> tokenize_line(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

ConicProgram import_cbf(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> section_lines;
  std::map<std::string, std::vector<std::vector<std::string>>> sections;
  std::string current;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] == '#') continue;
    auto toks = tokenize_line(line);
    if (toks.empty()) continue;
    const std::string& head = toks[0];
    if (head == "VER" || head == "OBJSENSE" || head == "VAR" || head == "CON" ||
        head == "PSDCON" || head == "OBJACOORD" || head == "OBJBCOORD" ||
        head == "ACOORD" || head == "BCOORD" || head == "HCOORD" ||
        head == "DCOORD") {
      current = head;
      sections[current];
    } else {
      if (current.empty()) throw precondition_error("CBF: data before section");
      sections[current].push_back(toks);
    }
  }

  auto need = [&](const char* name) -> std::vector<std::vector<std::string>>& {
    auto it = sections.find(name);
    if (it == sections.end())
      throw precondition_error(std::string("CBF: missing section ") + name);
    return it->second;
  };

  if (need("VER").at(0).at(0) != "1")
    throw precondition_error("CBF: unsupported version");
  if (need("OBJSENSE").at(0).at(0) != "MIN")
    throw precondition_error("CBF: only MIN objective supported");

  ConicProgram p;
  const auto& var = need("VAR");
  p.num_vars = std::stoll(var.at(0).at(0));
  for (size_t i = 1; i < var.size(); ++i)
    if (var[i].at(0) != "F")
      throw precondition_error("CBF: only free variables supported");
  p.objective = Vector::Zero(p.num_vars);

  std::vector<ConeBlock> scalar_blocks;
  Index n_scalar = 0;
  if (sections.count("CON")) {
    const auto& con = sections["CON"];
    for (size_t i = 1; i < con.size(); ++i) {
      const std::string& dom = con[i].at(0);
      const Index d = std::stoll(con[i].at(1));
      ConeKind kind;
      if (dom == "L+") kind = ConeKind::NonNeg;
      else if (dom == "L=") kind = ConeKind::Zero;
      else if (dom == "Q") kind = ConeKind::SecondOrder;
      else throw precondition_error("CBF: unsupported domain " + dom);
      scalar_blocks.push_back({kind, d});
      n_scalar += d;
    }
  }
  std::vector<Index> psd_sides;
  Index n_psd_rows = 0;
  if (sections.count("PSDCON")) {
    const auto& pc = sections["PSDCON"];
    for (size_t i = 1; i < pc.size(); ++i) {
      psd_sides.push_back(std::stoll(pc[i].at(0)));
      n_psd_rows += svec_size(psd_sides.back());
    }
  }

  p.cones.blocks = scalar_blocks;
  for (Index side : psd_sides) p.cones.blocks.push_back({ConeKind::Psd, side});
  const Index m = n_scalar + n_psd_rows;
  p.rhs = Vector::Zero(m);
  std::vector<Triplet> trips;

  if (sections.count("OBJACOORD"))
    for (size_t i = 1; i < sections["OBJACOORD"].size(); ++i) {
      const auto& t = sections["OBJACOORD"][i];
      p.objective[std::stoll(t.at(0))] = std::stod(t.at(1));
    }
  if (sections.count("OBJBCOORD"))
    p.objective_offset = std::stod(sections["OBJBCOORD"].at(0).at(0));
  if (sections.count("ACOORD"))
    for (size_t i = 1; i < sections["ACOORD"].size(); ++i) {
      const auto& t = sections["ACOORD"][i];
      trips.emplace_back(std::stoll(t.at(0)), std::stoll(t.at(1)),
                         -std::stod(t.at(2)));
    }
  if (sections.count("BCOORD"))
    for (size_t i = 1; i < sections["BCOORD"].size(); ++i) {
      const auto& t = sections["BCOORD"][i];
      p.rhs[std::stoll(t.at(0))] = std::stod(t.at(1));
    }

  // PSD entries: psd block pi row offset
  std::vector<Index> psd_offsets(psd_sides.size());
  {
    Index off = n_scalar;
    for (size_t i = 0; i < psd_sides.size(); ++i) {
      psd_offsets[i] = off;
      off += svec_size(psd_sides[i]);
    }
  }
  auto svec_row = [&](Index pi, Index i, Index j) {
    if (i < j) std::swap(i, j);
    return psd_offsets[pi] + svec_index(i, j, psd_sides[pi]);
  };
  auto scale_of = [&](Index i, Index j) { return i == j ? 1.0 : kSqrt2; };
  if (sections.count("HCOORD"))
    for (size_t i = 1; i < sections["HCOORD"].size(); ++i) {
      const auto& t = sections["HCOORD"][i];
      const Index pi = std::stoll(t.at(0)), var = std::stoll(t.at(1));
      const Index r = std::stoll(t.at(2)), c = std::stoll(t.at(3));
      trips.emplace_back(svec_row(pi, r, c), var,
                         -std::stod(t.at(4)) * scale_of(r, c));
    }
  if (sections.count("DCOORD"))
    for (size_t i = 1; i < sections["DCOORD"].size(); ++i) {
      const auto& t = sections["DCOORD"][i];
      const Index pi = std::stoll(t.at(0));
      const Index r = std::stoll(t.at(1)), c = std::stoll(t.at(2));
      p.rhs[svec_row(pi, r, c)] = std::stod(t.at(3)) * scale_of(r, c);
    }

  p.constraint = SparseMatrix(m, p.num_vars);
  p.constraint.setFromTriplets(trips.begin(), trips.end());
  p.constraint.makeCompressed();
  p.validate();
  return p;
}

ConicProgram import_sdpa(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && (line[0] == '"' || line[0] == '*')) continue;
    auto toks = tokenize_line(line);
    if (!toks.empty()) rows.push_back(toks);
  }
  if (rows.size() < 3) throw precondition_error("SDPA: truncated file");
  size_t cur = 0;
  const Index nvars = std::stoll(rows[cur++].at(0));
  const Index nblocks = std::stoll(rows[cur++].at(0));
  std::vector<Index> bsizes;
  while (static_cast<Index>(bsizes.size()) < nblocks) {
    for (const auto& t : rows.at(cur)) bsizes.push_back(std::stoll(t));
    ++cur;
  }
  Vector obj = Vector::Zero(nvars);
  {
    Index got = 0;
    while (got < nvars) {
      for (const auto& t : rows.at(cur)) obj[got++] = std::stod(t);
      ++cur;
    }
  }
  ConicProgram p;
  p.num_vars = nvars;
  p.objective = obj;
  std::vector<Index> offsets(nblocks);
  Index m = 0;
  for (Index b = 0; b < nblocks; ++b) {
    offsets[b] = m;
    if (bsizes[b] < 0) {
      p.cones.blocks.push_back({ConeKind::NonNeg, -bsizes[b]});
      m += -bsizes[b];
    } else {
      p.cones.blocks.push_back({ConeKind::Psd, bsizes[b]});
      m += svec_size(bsizes[b]);
    }
  }
  p.rhs = Vector::Zero(m);
  std::vector<Triplet> trips;
  for (; cur < rows.size(); ++cur) {
    const auto& t = rows[cur];
    const Index matno = std::stoll(t.at(0));
    const Index blk = std::stoll(t.at(1)) - 1;
    const Index i = std::stoll(t.at(2)) - 1, j = std::stoll(t.at(3)) - 1;
    const double v = std::stod(t.at(4));
    Index row;
    double scale = 1.0;
    if (bsizes[blk] < 0) {
      if (i != j) throw precondition_error("SDPA: off-diagonal in LP block");
      row = offsets[blk] + i;
    } else {
      const Index r = std::max(i, j), c = std::min(i, j);
      row = offsets[blk] + svec_index(r, c, bsizes[blk]);
      scale = (i == j) ? 1.0 : kSqrt2;
    }
    if (matno == 0)
      p.rhs[row] = -v * scale;
    else
      trips.emplace_back(row, matno - 1, -v * scale);
  }
  p.constraint = SparseMatrix(m, nvars);
  p.constraint.setFromTriplets(trips.begin(), trips.end());
  p.constraint.makeCompressed();
  p.validate();
  return p;
}

}  // namespace

std::string export_program(const ConicProgram& prog, ExportFormat format) {
  prog.validate();
  return format == ExportFormat::Cbf ? export_cbf(prog) : export_sdpa(prog);
}

ConicProgram import_program(const std::string& text, ExportFormat format) {
  return format == ExportFormat::Cbf ? import_cbf(text) : import_sdpa(text);
}

const char* export_extension(ExportFormat format) {
  return format == ExportFormat::Cbf ? ".cbf" : ".dat-s";
}

}  // namespace wassdro::conic
