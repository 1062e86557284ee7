#pragma once

// Random scenarios whose matrices are exactly rational, so the exact oracle
// can reproduce every table without rounding.
//
//   qubit pairs: spin observables along Pythagorean directions on either
//     side of a two-qubit system, state a rational mixture of Bell states,
//     product states and the maximally mixed state;
//   hub families: dim 3 or 4, rational orthogonal bases from the Cayley
//     transform, a degenerate hub observable and spokes rotated inside its
//     eigenspaces (so they commute with the hub but not with each other).

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "exact_oracle.hpp"

namespace qctx::oracle {

using Rng = std::mt19937_64;

inline std::pair<Q, Q> pythagorean_direction(Rng& rng) {
  static const int triples[][3] = {{3, 4, 5}, {5, 12, 13}, {8, 15, 17}, {7, 24, 25}, {20, 21, 29}};
  std::uniform_int_distribution<int> kind(0, 6);
  std::uniform_int_distribution<int> coin(0, 1);
  Q c, s;
  const int k = kind(rng);
  if (k == 5) {
    c = 1, s = 0;
  } else if (k == 6) {
    c = 0, s = 1;
  } else {
    c = Q(triples[k][0], triples[k][2]);
    s = Q(triples[k][1], triples[k][2]);
    if (coin(rng)) std::swap(c, s);
  }
  if (coin(rng)) c = -c;
  if (coin(rng)) s = -s;
  c.canonicalize();
  s.canonicalize();
  return {c, s};
}

// Spin observable c*sz + s*sx with eigenprojectors (I +- n.sigma)/2.
inline std::vector<ExactBlock> spin_blocks(const Q& c, const Q& s) {
  QMatrix plus(2), minus(2);
  const Q h(1, 2);
  plus(0, 0) = h * (1 + c), plus(0, 1) = h * s, plus(1, 0) = h * s, plus(1, 1) = h * (1 - c);
  minus(0, 0) = h * (1 - c), minus(0, 1) = -h * s, minus(1, 0) = -h * s, minus(1, 1) = h * (1 + c);
  return {{Q(1), plus}, {Q(-1), minus}};
}

inline ExactObservable local_spin(std::string label, bool first_party, const Q& c, const Q& s) {
  ExactObservable o{std::move(label), {}};
  for (ExactBlock& b : spin_blocks(c, s)) {
    const QMatrix id = QMatrix::identity(2);
    o.blocks.push_back({b.eigenvalue, first_party ? kron(b.projector, id) : kron(id, b.projector)});
  }
  return o;
}

inline QMatrix pure_state(const std::vector<Q>& v, const Q& norm2) {
  QMatrix m(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = v[i] * v[j] / norm2;
  return m;
}

inline ExactScenario random_qubit_pair(Rng& rng) {
  ExactScenario s;
  s.dim = 4;
  std::uniform_int_distribution<int> count(1, 2);
  const bool square = rng() % 2 == 0;  // full A, A', B, B' configuration
  int na = square ? 2 : count(rng), nb = square ? 2 : count(rng);
  if (na + nb == 2 && std::uniform_int_distribution<int>(0, 3)(rng) == 0) na = 2;
  const char* a_labels[] = {"A", "A'"};
  const char* b_labels[] = {"B", "B'"};
  // Most squares use directions close to the CHSH-optimal ones
  // (z, x on one side, roughly 45 degrees off on the other).
  const bool near_optimal = square && rng() % 4 != 0;
  for (int k = 0; k < na; ++k) {
    auto [c, sn] = pythagorean_direction(rng);
    if (near_optimal) c = k == 0 ? 1 : 0, sn = k == 0 ? 0 : 1;
    s.observables.push_back(local_spin(a_labels[k], true, c, sn));
  }
  for (int k = 0; k < nb; ++k) {
    auto [c, sn] = pythagorean_direction(rng);
    if (near_optimal) c = Q(-20, 29), sn = Q(k == 0 ? 21 : -21, 29);
    s.observables.push_back(local_spin(b_labels[k], false, c, sn));
  }

  const std::vector<QMatrix> components{
      pure_state({0, 1, -1, 0}, 2),  // singlet
      pure_state({1, 0, 0, 1}, 2),   // phi+
      pure_state({1, 0, 0, 0}, 1),   // |00>
      pure_state({0, 1, 0, 0}, 1),   // |01>
      Q(1, 4) * QMatrix::identity(4),
  };
  // Near-optimal squares get a singlet-heavy state so that both verdicts occur.
  std::uniform_int_distribution<int> weight(0, near_optimal ? 1 : 4);
  std::vector<int> w(components.size());
  int total = 0;
  while (total == 0) {
    total = 0;
    for (std::size_t k = 0; k < w.size(); ++k) total += (w[k] = weight(rng) * (k == 0 ? 4 : 1));
    if (near_optimal) {
      const int extra = 2 + static_cast<int>(rng() % 8);
      w[0] += extra;
      total += extra;
    }
  }
  s.rho = QMatrix(4);
  for (std::size_t k = 0; k < w.size(); ++k)
    if (w[k]) s.rho = s.rho + Q(w[k], total) * components[k];
  return s;
}

// Cayley transform (I - K)(I + K)^-1 of a random skew-symmetric K.
inline QMatrix random_orthogonal(std::size_t dim, Rng& rng) {
  std::uniform_int_distribution<int> entry(-1, 1);
  QMatrix k(dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i + 1; j < dim; ++j) {
      k(i, j) = entry(rng);
      k(j, i) = -k(i, j);
    }
  const QMatrix id = QMatrix::identity(dim);
  return (id - k) * inverse(id + k);
}

// Rotation by a Pythagorean angle inside the plane of basis indices (i, j).
inline QMatrix plane_rotation(std::size_t dim, std::size_t i, std::size_t j, Rng& rng) {
  auto [c, s] = pythagorean_direction(rng);
  QMatrix r = QMatrix::identity(dim);
  r(i, i) = c, r(i, j) = -s, r(j, i) = s, r(j, j) = c;
  return r;
}

inline std::vector<Q> random_levels(std::size_t dim, std::size_t distinct, Rng& rng) {
  std::vector<int> pool{-2, -1, 0, 1, 2, 3};
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<Q> d;
  for (std::size_t i = 0; i < dim; ++i) d.push_back(pool[i < distinct ? i : rng() % distinct]);
  std::shuffle(d.begin(), d.end(), rng);
  return d;
}

inline std::size_t cell_count(const ExactScenario& s) {
  std::size_t n = 1;
  for (const ExactObservable& o : s.observables) n *= o.blocks.size();
  return n;
}

inline ExactScenario random_hub_family(Rng& rng, std::size_t max_cells = 16) {
  std::uniform_int_distribution<int> dim_pick(3, 4);
  std::uniform_int_distribution<int> obs_count(2, 4);
  while (true) {
    ExactScenario s;
    s.dim = static_cast<std::size_t>(dim_pick(rng));
    const QMatrix base = random_orthogonal(s.dim, rng);
    // Hub: eigenspaces {0}, {1..dim-1} or {0,1}, {2,3}.
    std::vector<Q> hub(s.dim, Q(-1));
    hub[0] = 1;
    if (s.dim == 4 && rng() % 2) hub[1] = 1;
    s.observables.push_back(observable_in_basis("H", base, hub));
    const std::size_t split = hub[1] == 1 ? 2 : 1;

    const int total = obs_count(rng);
    for (int k = 1; k < total; ++k) {
      QMatrix rot = QMatrix::identity(s.dim);
      const int kind = static_cast<int>(rng() % 4);
      if (kind == 3) {
        // Unrelated basis: generally compatible with nothing.
        const std::size_t distinct = 2 + rng() % 2;
        s.observables.push_back(observable_in_basis("F" + std::to_string(k), random_orthogonal(s.dim, rng),
                                                    random_levels(s.dim, std::min(distinct, s.dim), rng)));
        continue;
      }
      // Rotations that stay inside the hub eigenspaces.
      if (s.dim - split >= 2) rot = rot * plane_rotation(s.dim, split, s.dim - 1, rng);
      if (s.dim - split >= 3) rot = rot * plane_rotation(s.dim, split, split + 1, rng);
      if (split == 2) rot = rot * plane_rotation(s.dim, 0, 1, rng);
      const std::size_t distinct = 2 + rng() % 2;
      s.observables.push_back(observable_in_basis("S" + std::to_string(k), base * rot,
                                                  random_levels(s.dim, std::min(distinct, s.dim), rng)));
    }
    if (cell_count(s) > max_cells) continue;

    // State O diag(w) O^T with small rational weights, some zero.
    const QMatrix ob = random_orthogonal(s.dim, rng);
    std::vector<int> w(s.dim);
    int sum = 0;
    while (sum == 0) {
      sum = 0;
      for (int& x : w) sum += (x = static_cast<int>(rng() % 4));
    }
    s.rho = QMatrix(s.dim);
    for (std::size_t k = 0; k < s.dim; ++k) {
      if (!w[k]) continue;
      QMatrix p(s.dim);
      for (std::size_t i = 0; i < s.dim; ++i)
        for (std::size_t j = 0; j < s.dim; ++j) p(i, j) = ob(i, k) * ob(j, k);
      s.rho = s.rho + Q(w[k], sum) * p;
    }
    return s;
  }
}

}  // namespace qctx::oracle
