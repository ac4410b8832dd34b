#include "trolink/probes.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "trolink/linking.hpp"

namespace trolink {

namespace {

const HModule& parent_module(const Subspace& s, const char* who) {
  if (!s.parent().is_module())
    throw structural_error(std::string(who) + ": subspace must live in a module");
  return s.parent().module();
}

}  // namespace

HereditaryCheck is_ternary_hereditary(const Subspace& f) {
  const HModule& e = parent_module(f, "is_ternary_hereditary");
  HereditaryCheck out;
  out.ternary_subspace = is_ternary_subspace(f).holds;
  const Subspace all = Subspace::full(Ambient(e), f.tol());
  const Subspace products = product_span(ProductKind::ternary, f, all, f);
  const Containment cont = f.contains(products);
  out.holds = cont.contained;
  out.escape = cont.residual;
  return out;
}

HereditaryAlgebraCheck is_hereditary_subalgebra(const Subspace& c) {
  if (!c.parent().is_algebra())
    throw structural_error("is_hereditary_subalgebra: subspace must live in an algebra");
  const FdAlgebra& a = c.parent().algebra();
  HereditaryAlgebraCheck out;

  // Subalgebra: closed under products and under the adjoint.
  const Containment prod = c.contains(alg_product_span(c, c));
  Mat adjoints(a.dim(), c.dim());
  for (Index j = 0; j < c.dim(); ++j) {
    const AlgElement el = AlgElement::from_flat(a, c.onb().col(j));
    adjoints.col(j) = alg_adjoint(el).flatten();
  }
  const double adj_escape = c.max_escape(adjoints);
  out.subalgebra = prod.contained && adj_escape <= c.tol();

  // Heredity: C B C stays inside C, with B the whole ambient algebra.
  const Subspace all = Subspace::full(Ambient(a), c.tol());
  const Subspace cbc = alg_product_span(alg_product_span(c, all), c);
  const Containment cont = c.contains(cbc);
  out.holds = cont.contained;
  out.escape = cont.residual;
  return out;
}

HereditaryAlgebraCheck is_linking_hereditary(const Subspace& f) {
  const HModule& e = parent_module(f, "is_linking_hereditary");
  const LinkingAlgebra l = build_linking(e, true);
  return is_hereditary_subalgebra(embedded_corner_span(l, f));
}

HereditaryFacts hereditary_facts(const Subspace& f) {
  parent_module(f, "hereditary_facts");
  HereditaryFacts out;
  const HereditaryCheck th = is_ternary_hereditary(f);
  out.ternary_subspace = th.ternary_subspace;
  out.ternary_hereditary = th.holds;
  const HereditaryAlgebraCheck lh = is_linking_hereditary(f);
  out.linking_hereditary = lh.subalgebra && lh.holds;
  const HereditaryAlgebraCheck bh = is_hereditary_subalgebra(product_span(ProductKind::inner, f, f));
  out.base_hereditary = bh.subalgebra && bh.holds;
  const HereditaryAlgebraCheck kh =
      is_hereditary_subalgebra(product_span(ProductKind::rankone, f, f));
  out.compacts_hereditary = kh.subalgebra && kh.holds;
  return out;
}

bool hereditary_implications_hold(const HereditaryFacts& h) {
  if (!h.ternary_subspace) return true;  // nothing is claimed off the ternary world
  if (h.linking_hereditary && !h.ternary_hereditary) return false;
  if ((h.base_hereditary || h.compacts_hereditary) && !h.ternary_hereditary) return false;
  if (h.linking_hereditary != (h.base_hereditary && h.compacts_hereditary)) return false;
  return true;
}

namespace {

FdAlgebra random_algebra(Rng& rng, const SizeBounds& bounds) {
  const Index blocks = rng.uniform_index(1, std::max<Index>(1, bounds.max_blocks));
  std::vector<Index> dims(static_cast<size_t>(blocks));
  for (auto& d : dims) d = rng.uniform_index(1, std::max<Index>(1, bounds.max_block_dim));
  return FdAlgebra(dims);
}

HModule random_module(Rng& rng, const SizeBounds& bounds) {
  const FdAlgebra base = random_algebra(rng, bounds);
  std::vector<Index> mults(static_cast<size_t>(base.block_count()));
  bool any = false;
  for (auto& m : mults) {
    m = rng.uniform_index(0, std::max<Index>(1, bounds.max_mult));
    any = any || m > 0;
  }
  if (!any) mults[static_cast<size_t>(rng.uniform_index(0, base.block_count() - 1))] = 1;
  return HModule(base, mults);
}

// Three families of ternary-flavoured subspaces.  Block subsets and rotated
// coordinate corners are ternary by construction; closures of random spans
// are ternary by iteration and tend to be large and non-hereditary.
Subspace random_probe_subspace(Rng& rng, const HModule& e, Index recipe) {
  switch (recipe % 3) {
    case 0: {
      std::vector<char> mask(static_cast<size_t>(e.block_count()), 0);
      for (auto& b : mask) b = rng.uniform01() < 0.5 ? 1 : 0;
      return module_block_subspace(e, mask);
    }
    case 1: {
      const auto active = e.active_blocks();
      if (active.empty()) return Subspace::zero(Ambient(e));
      const Index k = active[static_cast<size_t>(
          rng.uniform_index(0, static_cast<Index>(active.size()) - 1))];
      const Index p = rng.uniform_index(1, e.rows(k));
      const Index q = rng.uniform_index(1, e.cols(k));
      const Mat u = rng.unitary(e.rows(k));
      const Mat v = rng.unitary(e.cols(k));
      Mat gens = Mat::Zero(e.dim(), p * q);
      Index col = 0;
      for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < q; ++j) {
          ModElement x = ModElement::zero(e);
          x.block(k) = u.col(i) * v.col(j).adjoint();
          gens.col(col++) = x.flatten();
        }
      return span(Ambient(e), gens);
    }
    default: {
      const Index ngen = rng.uniform01() < 0.4 ? 2 : 1;
      Mat gens(e.dim(), ngen);
      for (Index j = 0; j < ngen; ++j) gens.col(j) = rng.gaussian_matrix(e.dim(), 1);
      Subspace s = span(Ambient(e), gens);
      for (int iter = 0; iter < 8; ++iter) {
        const Subspace grown = span_union(s, product_span(ProductKind::ternary, s, s, s));
        if (grown.dim() == s.dim()) break;
        s = grown;
      }
      return s;
    }
  }
}

// Strides sample indices across workers; sample i depends only on
// derive(seed, i), so the merged report cannot depend on the worker count.
template <typename Report, typename Body>
std::vector<Report> striped_samples(Index count, Index workers, const Body& body) {
  if (count < 0) throw structural_error("sample count must be nonnegative");
  workers = std::max<Index>(1, std::min<Index>(workers, std::max<Index>(1, count)));
  std::vector<Report> parts(static_cast<size_t>(workers));
  std::exception_ptr first_error;
  std::mutex error_lock;
  const auto run = [&](Index w) {
    try {
      for (Index i = w; i < count; i += workers) body(parts[static_cast<size_t>(w)], i);
    } catch (...) {
      const std::lock_guard<std::mutex> hold(error_lock);
      if (!first_error) first_error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers - 1));
  for (Index w = 1; w < workers; ++w) pool.emplace_back(run, w);
  run(0);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return parts;
}

}  // namespace

HereditarySearchReport hereditary_search(Index count, const SizeBounds& bounds,
                                         std::uint64_t seed, Index workers) {
  const auto parts = striped_samples<HereditarySearchReport>(
      count, workers, [&](HereditarySearchReport& part, Index i) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
        const HModule e = random_module(rng, bounds);
        const Subspace f = random_probe_subspace(rng, e, i);
        const HereditaryFacts h = hereditary_facts(f);
        part.ternary_subspaces += h.ternary_subspace ? 1 : 0;
        part.ternary_hereditary += h.ternary_hereditary ? 1 : 0;
        part.linking_hereditary += h.linking_hereditary ? 1 : 0;
        part.base_hereditary += h.base_hereditary ? 1 : 0;
        part.compacts_hereditary += h.compacts_hereditary ? 1 : 0;
        if (h.ternary_subspace && h.ternary_hereditary && !h.linking_hereditary) {
          ++part.open_direction;
          part.open_samples.push_back(i);
        }
        if (!hereditary_implications_hold(h)) {
          ++part.implication_violations;
          part.violation_samples.push_back(i);
        }
      });

  HereditarySearchReport out;
  out.seed = seed;
  out.count = count;
  for (const auto& p : parts) {
    out.ternary_subspaces += p.ternary_subspaces;
    out.ternary_hereditary += p.ternary_hereditary;
    out.linking_hereditary += p.linking_hereditary;
    out.base_hereditary += p.base_hereditary;
    out.compacts_hereditary += p.compacts_hereditary;
    out.open_direction += p.open_direction;
    out.open_samples.insert(out.open_samples.end(), p.open_samples.begin(),
                            p.open_samples.end());
    out.implication_violations += p.implication_violations;
    out.violation_samples.insert(out.violation_samples.end(), p.violation_samples.begin(),
                                 p.violation_samples.end());
  }
  std::sort(out.open_samples.begin(), out.open_samples.end());
  std::sort(out.violation_samples.begin(), out.violation_samples.end());
  return out;
}

ExpectationReport is_ternary_conditional_expectation(const HModule& e, const Mat& m,
                                                     double tol, Index norm_samples,
                                                     std::uint64_t norm_seed) {
  if (m.rows() != e.dim() || m.cols() != e.dim())
    throw structural_error("is_ternary_conditional_expectation: map shape must match the module");
  ExpectationReport out;
  if (e.dim() == 0) {
    out.idempotent = out.range_ternary = out.ternary_condition = true;
    out.contractive_on_samples = true;
    return out;
  }
  const double scale = spectral_norm(m);

  const Mat diff = m * m - m;
  double worst = 0.0;
  for (Index j = 0; j < diff.cols(); ++j) worst = std::max(worst, diff.col(j).norm());
  out.idempotent_residual = worst;
  out.idempotent = worst <= tol * std::max(1.0, scale * scale);

  const Subspace range = span(Ambient(e), m, tol);
  const ActionClosure closure = is_ternary_subspace(range);
  out.range_ternary = closure.holds;
  out.range_escape = closure.escape;

  const Index d = e.dim();
  std::vector<ModElement> unit, image;
  unit.reserve(static_cast<size_t>(d));
  image.reserve(static_cast<size_t>(d));
  for (Index a = 0; a < d; ++a) {
    Vec ea = Vec::Zero(d);
    ea(a) = 1.0;
    unit.push_back(ModElement::from_flat(e, ea));
    image.push_back(ModElement::from_flat(e, Vec(m.col(a))));
  }
  double law = 0.0;
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b)
      for (Index c = 0; c < d; ++c) {
        const Vec lhs = m * act(image[a], inner(unit[b], image[c])).flatten();
        const Vec rhs = act(image[a], inner(image[b], image[c])).flatten();
        law = std::max(law, (lhs - rhs).norm());
      }
  out.ternary_residual = law;
  out.ternary_condition = law <= tol * std::max(1.0, scale * scale * scale);

  // Contraction in the module norm: sampled ratios refined by a short
  // stochastic climb plus a push of the best point through the map.  This
  // is a lower bound for the true operator norm, never an upper bound.
  Rng rng(norm_seed);
  double best = 0.0;
  Vec arg;
  const auto ratio = [&](const Vec& x) -> double {
    const double nx = mod_norm(ModElement::from_flat(e, x));
    if (nx < 1e-12) return -1.0;
    return mod_norm(ModElement::from_flat(e, Vec(m * x))) / nx;
  };
  for (Index t = 0; t < norm_samples; ++t) {
    const Vec x = rng.gaussian_matrix(d, 1);
    const double r = ratio(x);
    if (r > best) {
      best = r;
      arg = x;
    }
  }
  if (arg.size() > 0) {
    const Vec pushed = m * arg;
    const double rp = ratio(pushed);
    if (rp > best) {
      best = rp;
      arg = pushed;
    }
    double step = 0.5;
    for (int iter = 0; iter < 64; ++iter) {
      const Vec cand = arg + step * arg.norm() * Vec(rng.gaussian_matrix(d, 1));
      const double r = ratio(cand);
      if (r > best) {
        best = r;
        arg = cand;
      } else {
        step *= 0.85;
      }
    }
  }
  out.contraction_lower_bound = best;
  out.contractive_on_samples = best <= 1.0 + 1e-6;
  return out;
}

Q1SearchReport q1_search(Index count, const SizeBounds& bounds, std::uint64_t seed,
                         Index workers) {
  const auto parts = striped_samples<Q1SearchReport>(
      count, workers, [&](Q1SearchReport& part, Index i) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
        const HModule e = random_module(rng, bounds);
        Mat m;
        if (i % 3 == 2) {
          // Coordinate projection onto a block subset: kills whole blocks.
          std::vector<char> mask(static_cast<size_t>(e.block_count()), 0);
          for (auto& b : mask) b = rng.uniform01() < 0.5 ? 1 : 0;
          const Subspace f = module_block_subspace(e, mask);
          m = f.onb() * f.onb().adjoint();
        } else {
          const Subspace f =
              random_probe_subspace(rng, e, rng.uniform_index(0, 2));
          const Mat q = f.onb();
          if (i % 3 == 0 || f.dim() == 0) {
            m = q * q.adjoint();
          } else {
            // Oblique idempotent with the same range: skewed complement.
            const Mat w = q + 0.25 * rng.gaussian_matrix(e.dim(), f.dim());
            const Mat wq = w.adjoint() * q;
            if (numeric_rank(wq, 1e-9) < f.dim())
              m = q * q.adjoint();
            else
              m = q * wq.partialPivLu().solve(Mat(w.adjoint()));
          }
        }
        const std::uint64_t norm_seed = rng.next_u64();
        const ExpectationReport rep =
            is_ternary_conditional_expectation(e, m, kDefaultTol, 32, norm_seed);
        const int cell = (rep.idempotent ? 1 : 0) | (rep.range_ternary ? 2 : 0) |
                         (rep.ternary_condition ? 4 : 0) |
                         (rep.contractive_on_samples ? 8 : 0);
        ++part.cells[static_cast<size_t>(cell)];
        part.all_pass += rep.all_pass() ? 1 : 0;
      });

  Q1SearchReport out;
  out.seed = seed;
  out.count = count;
  for (const auto& p : parts) {
    for (size_t c = 0; c < out.cells.size(); ++c) out.cells[c] += p.cells[c];
    out.all_pass += p.all_pass;
  }
  return out;
}

}  // namespace trolink
