#!/usr/bin/env python
# -*- coding: UTF-8 -*-

# Copyright (c) 2024, Sandflow Consulting LLC
#
# Redistribution and use in source and binary forms, with or without
# modification, are permitted provided that the following conditions are met:
#
# 1. Redistributions of source code must retain the above copyright notice, this
#    list of conditions and the following disclaimer.
# 2. Redistributions in binary form must reproduce the above copyright notice,
#    this list of conditions and the following disclaimer in the documentation
#    and/or other materials provided with the distribution.
#
# THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS" AND
# ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE IMPLIED
# WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
# DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT OWNER OR CONTRIBUTORS BE LIABLE FOR
# ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL DAMAGES
# (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR SERVICES;
# LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER CAUSED AND
# ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT, STRICT LIABILITY, OR TORT
# (INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE USE OF THIS
# SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE.

'''Interaction networks and the undirected-graph algorithms used to build focal designs'''

from __future__ import annotations

import logging
import math
import typing
from dataclasses import dataclass

import networkx as nx
import numpy as np
import pandas as pd
from scipy import sparse

LOGGER = logging.getLogger(__name__)

_DENSE_LIMIT = 64

EDGE_LIST_COLUMNS = ("from", "to")


class Network:
  '''Directed interaction network over `n` units, with 0-based unit indices.

  `A[i, j] == 1` means that unit `j` affects unit `i`, i.e. `j` is a peer of `i`.
  Self-loops are never stored. Instances are immutable.
  '''

  def __init__(self, n: int, peer_lists: typing.Sequence[typing.Iterable[int]]):
    if n < 1:
      raise ValueError("A network must have at least one unit")

    if len(peer_lists) != n:
      raise ValueError("There must be exactly one peer list per unit")

    peers = []
    for i, row in enumerate(peer_lists):
      row_peers = sorted(set(int(j) for j in row))
      for j in row_peers:
        if j < 0 or j >= n:
          raise IndexError(f"Peer {j} of unit {i} is outside [0, {n})")
      if i in row_peers:
        raise ValueError(f"Unit {i} cannot be its own peer")
      peers.append(tuple(row_peers))

    self._n = n
    self._peers: typing.Tuple[typing.Tuple[int, ...], ...] = tuple(peers)

    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(p) for p in peers])
    indices = np.fromiter((j for p in peers for j in p), dtype=np.int64, count=int(indptr[-1]))
    self._adjacency = sparse.csr_matrix(
      (np.ones(len(indices), dtype=np.int64), indices, indptr),
      shape=(n, n)
    )

  @staticmethod
  def from_edges(n: int, edges: typing.Iterable[typing.Tuple[int, int]], undirected: bool = False) -> Network:
    '''Creates a network from `(i, j)` pairs meaning "j affects i". If `undirected` is `True`,
    every edge is also stored in the reverse direction.'''
    rows: typing.List[typing.Set[int]] = [set() for _ in range(n)]
    for i, j in edges:
      if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"Edge ({i}, {j}) is outside [0, {n})")
      if i == j:
        raise ValueError(f"Self-loop at unit {i}")
      rows[i].add(j)
      if undirected:
        rows[j].add(i)
    return Network(n, rows)

  @staticmethod
  def empty(n: int) -> Network:
    '''Returns the network with `n` units and no edges'''
    return Network(n, [()] * n)

  @property
  def n(self) -> int:
    '''Number of units'''
    return self._n

  @property
  def adjacency(self) -> sparse.csr_matrix:
    '''Sparse adjacency matrix; must not be modified'''
    return self._adjacency

  def _check_unit(self, i: int):
    if not 0 <= i < self._n:
      raise IndexError(f"Unit {i} is outside [0, {self._n})")

  def peers(self, i: int) -> typing.FrozenSet[int]:
    '''Returns the peers of unit `i`, i.e. the units `j` with `A[i, j] == 1`'''
    self._check_unit(i)
    return frozenset(self._peers[i])

  def peer_list(self, i: int) -> typing.Tuple[int, ...]:
    '''Returns the peers of unit `i` in increasing order'''
    self._check_unit(i)
    return self._peers[i]

  def closed_neighborhood(self, i: int) -> typing.FrozenSet[int]:
    '''Returns `{i}` together with the peers of `i`'''
    self._check_unit(i)
    return frozenset(self._peers[i]) | {i}

  def degree(self, i: int) -> int:
    '''Returns the number of peers of unit `i`'''
    self._check_unit(i)
    return len(self._peers[i])

  def degrees(self) -> np.ndarray:
    '''Returns the number of peers of every unit'''
    return np.diff(self._adjacency.indptr)

  def peer_counts(self, z: np.ndarray, units: typing.Optional[typing.Sequence[int]] = None) -> np.ndarray:
    '''Returns the number of treated peers of each of `units` (all units if `None`)'''
    adjacency = self._adjacency if units is None else self._adjacency[np.asarray(units, dtype=np.int64)]
    return np.asarray(adjacency @ np.asarray(z, dtype=np.int64)).ravel()

  def edges(self) -> typing.Iterator[typing.Tuple[int, int]]:
    '''Iterates over `(i, j)` with `A[i, j] == 1`, in row-major order'''
    for i, row in enumerate(self._peers):
      for j in row:
        yield (i, j)

  def edge_count(self) -> int:
    '''Number of stored (directed) edges'''
    return int(self._adjacency.nnz)

  def is_symmetric(self) -> bool:
    '''Returns whether every edge is stored in both directions'''
    return (self._adjacency != self._adjacency.T).nnz == 0

  def to_dense(self) -> np.ndarray:
    '''Returns the dense adjacency matrix; only available for small networks'''
    if self._n > _DENSE_LIMIT:
      raise ValueError(f"Dense adjacency is only available for networks of at most {_DENSE_LIMIT} units")
    return self._adjacency.toarray()

  def __eq__(self, other) -> bool:
    if not isinstance(other, Network):
      return NotImplemented
    return self._n == other._n and self._peers == other._peers

  def __hash__(self) -> int:
    return hash((self._n, self._peers))

  def __repr__(self) -> str:
    return f"Network(n={self._n}, edges={self.edge_count()})"


def erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Network:
  '''Generates an undirected Erdos-Renyi network: every unordered pair of distinct units
  is linked independently with probability `p`. The adjacency is stored symmetrically.'''

  if n < 1:
    raise ValueError("n must be a positive integer")

  if not 0 <= p <= 1 or math.isnan(p):
    raise ValueError("p must be a probability")

  rows, cols = np.triu_indices(n, k=1)
  linked = rng.random(len(rows)) < p

  return Network.from_edges(n, zip(rows[linked].tolist(), cols[linked].tolist()), undirected=True)


def paired_network(n: int) -> Network:
  '''Returns the couples network: unit `2k` and unit `2k + 1` are each other's only peer'''
  if n < 2 or n % 2 != 0:
    raise ValueError("A paired population must have a positive even size")
  return Network.from_edges(n, ((k, k + 1) for k in range(0, n, 2)), undirected=True)


#
# Generic undirected graph algorithms
#

def common_friend_graph(
  net: Network,
  vertices: typing.Iterable[int],
  neighborhood: typing.Optional[typing.Callable[[int], typing.Iterable[int]]] = None
  ) -> nx.Graph:
  '''Returns the graph over `vertices` where `i` and `j` are adjacent whenever
  their closed neighborhoods intersect. Another `neighborhood(i)` may be supplied.'''

  graph = nx.Graph()
  vertices = sorted(set(vertices))

  for v in vertices:
    if not 0 <= v < net.n:
      raise IndexError(f"Vertex {v} is outside [0, {net.n})")

  if neighborhood is None:
    neighborhood = net.closed_neighborhood

  graph.add_nodes_from(vertices)

  # vertices whose neighborhood contains a given unit
  owners: typing.Dict[int, typing.List[int]] = {}
  for v in vertices:
    for w in neighborhood(v):
      owners.setdefault(w, []).append(v)

  for sharing in owners.values():
    for a in range(len(sharing)):
      for b in range(a + 1, len(sharing)):
        graph.add_edge(sharing[a], sharing[b])

  return graph


def greedy_independent_set(g: nx.Graph, rng: np.random.Generator) -> typing.Set[int]:
  '''Returns a maximal independent set of `g` built by repeatedly selecting a vertex
  of minimum degree in the remaining graph (ties broken by `rng`) and removing it
  together with its neighbors.'''

  remaining = g.copy()
  independent_set = set()

  while remaining.number_of_nodes() > 0:
    degrees = dict(remaining.degree)
    lowest = min(degrees.values())
    candidates = sorted(v for v, d in degrees.items() if d == lowest)
    vertex = candidates[int(rng.integers(len(candidates)))]

    independent_set.add(vertex)
    remaining.remove_nodes_from([vertex, *remaining.neighbors(vertex)])

  return independent_set


class _SwapSearch:
  '''Maximal independent set of a graph, with the number of set neighbors of every vertex'''

  def __init__(self, g: nx.Graph, members: typing.Iterable[int], rng: np.random.Generator):
    self.rng = rng
    self.order = sorted(g.nodes)
    self.neighbors = {v: tuple(sorted(g.neighbors(v))) for v in self.order}
    self.neighbor_sets = {v: frozenset(n) for v, n in self.neighbors.items()}
    self.members: typing.Set[int] = set()
    self.tightness = dict.fromkeys(self.order, 0)
    self.journal: typing.List[typing.Tuple[bool, int]] = []
    self.pending: typing.List[int] = []

    for v in sorted(set(members)):
      if self.tightness[v] > 0:
        raise ValueError("Vertices are not an independent set")
      self.insert(v)
    self.fill(self.order)
    self.journal.clear()

  def _apply(self, v: int, inserted: bool):
    step = 1 if inserted else -1
    if inserted:
      self.members.add(v)
    else:
      self.members.remove(v)
    for u in self.neighbors[v]:
      self.tightness[u] += step

  def insert(self, v: int):
    self._apply(v, True)
    self.journal.append((True, v))
    self.pending.append(v)

  def remove(self, v: int):
    self._apply(v, False)
    self.journal.append((False, v))
    for u in self.neighbors[v]:
      if self.tightness[u] == 1:
        # u has a single set neighbor left, which may now admit a swap
        self.pending.extend(w for w in self.neighbors[u] if w in self.members)

  def fill(self, candidates: typing.Iterable[int]):
    '''Inserts the free vertices among `candidates`'''
    candidates = list(candidates)
    for i in self.rng.permutation(len(candidates)):
      u = candidates[i]
      if u not in self.members and self.tightness[u] == 0:
        self.insert(u)

  def undo(self):
    '''Reverts the changes recorded since the journal was last cleared'''
    while self.journal:
      inserted, v = self.journal.pop()
      self._apply(v, not inserted)
    self.pending.clear()

  def _swap_pair(self, x: int) -> typing.Optional[typing.Tuple[int, int]]:
    loose = [u for u in self.neighbors[x] if self.tightness[u] == 1]
    for a in range(len(loose)):
      for b in range(a + 1, len(loose)):
        if loose[b] not in self.neighbor_sets[loose[a]]:
          return loose[a], loose[b]
    return None

  def local_search(self):
    '''Applies (1, 2)-swaps until none is left'''
    while self.pending:
      x = self.pending.pop()
      if x not in self.members:
        continue
      pair = self._swap_pair(x)
      if pair is None:
        continue
      self.remove(x)
      self.insert(pair[0])
      self.insert(pair[1])
      self.fill(self.neighbors[x])

  def perturb(self):
    '''Forces a random vertex outside the set into it'''
    outside = [v for v in self.order if v not in self.members]
    if len(outside) == 0:
      return
    v = outside[int(self.rng.integers(len(outside)))]
    evicted = [u for u in self.neighbors[v] if u in self.members]
    for u in evicted:
      self.remove(u)
    self.insert(v)
    for u in evicted:
      self.fill(self.neighbors[u])


def improve_independent_set(
  g: nx.Graph,
  independent_set: typing.Iterable[int],
  rng: np.random.Generator,
  rounds: int = 0
  ) -> typing.Set[int]:
  '''Enlarges the independent set `independent_set` of `g` by iterated local search.

  The local search replaces a set vertex by two non-adjacent vertices whose only set
  neighbor it is, until no such swap applies. Each of the `rounds` perturbations then forces
  a random vertex into the set, evicting its neighbors, and runs the local search again.
  Perturbations that shrink the set are reverted. Returns the largest maximal independent
  set encountered, which is never smaller than `independent_set`.

  Raises `ValueError` if `independent_set` is not an independent set of `g`.
  '''

  if rounds < 0:
    raise ValueError("Number of search rounds must be non-negative")

  search = _SwapSearch(g, independent_set, rng)
  search.local_search()
  search.journal.clear()
  best = set(search.members)

  for _ in range(rounds):
    size = len(search.members)
    search.perturb()
    search.local_search()

    if len(search.members) < size:
      search.undo()
    elif len(search.members) > len(best):
      best = set(search.members)
    search.journal.clear()

  LOGGER.debug("Local search enlarged an independent set to %s vertices", len(best))

  return best


class BicliqueScore:
  '''Scores used to rank bicliques by their number of units and of assignments'''

  @staticmethod
  def log(units: int, assignments: int) -> float:
    '''|N| log(1 + |Z|)'''
    return units * math.log1p(assignments)

  @staticmethod
  def units(units: int, assignments: int) -> float:
    '''|N|, with the number of assignments as a tie-breaker'''
    return units + assignments / (assignments + 1.0)

  @staticmethod
  def area(units: int, assignments: int) -> float:
    '''|N| |Z|'''
    return float(units * assignments)

  @staticmethod
  def by_name(name: str) -> typing.Callable[[int, int], float]:
    '''Returns the score function called `name`'''
    scores = {"log": BicliqueScore.log, "units": BicliqueScore.units, "area": BicliqueScore.area}
    if name not in scores:
      raise ValueError(f"Invalid biclique score '{name}'. Expect one of: {', '.join(scores)}.")
    return scores[name]


@dataclass(frozen=True)
class Biclique:
  '''A biclique given by row and column positions of a bipartite adjacency matrix'''
  rows: typing.Tuple[int, ...]
  columns: typing.Tuple[int, ...]
  score: float


def best_biclique(
  adjacency: np.ndarray,
  min_rows: int = 1,
  min_columns: int = 1,
  score: typing.Callable[[int, int], float] = BicliqueScore.log,
  max_expansions: int = 100000
  ) -> typing.Optional[Biclique]:
  '''Enumerates inclusion-maximal bicliques of the bipartite graph described by the boolean
  `adjacency` matrix (rows x columns) and returns the one with the highest `score` among those
  with at least `min_rows` rows and `min_columns` columns, or `None` if none was found.

  Maximal bicliques are the closed pairs (rows, columns) where the columns are exactly those
  adjacent to every row and vice versa. They are enumerated depth-first by adding rows in
  canonical order (close-by-one), rows with larger degree first. At most `max_expansions`
  closures are computed.
  '''

  adjacency = np.asarray(adjacency, dtype=bool)
  n_rows, n_cols = adjacency.shape

  if n_rows == 0 or n_cols == 0:
    return None

  order = sorted(range(n_rows), key=lambda r: (-int(adjacency[r].sum()), r))

  # column sets as arbitrary precision bit masks
  masks = []
  for r in order:
    mask = 0
    for c in np.flatnonzero(adjacency[r]).tolist():
      mask |= 1 << c
    masks.append(mask)

  def closure(columns: int) -> typing.Tuple[int, ...]:
    return tuple(k for k, m in enumerate(masks) if m & columns == columns)

  best: typing.Optional[Biclique] = None
  expansions = 0

  def consider(rows: typing.Tuple[int, ...], columns: int):
    nonlocal best
    column_count = bin(columns).count("1")
    if len(rows) < min_rows or column_count < min_columns:
      return
    value = score(len(rows), column_count)
    if best is None or value > best.score:
      best = Biclique(
        rows=tuple(sorted(order[k] for k in rows)),
        columns=tuple(c for c in range(n_cols) if columns >> c & 1),
        score=value
      )

  all_columns = (1 << n_cols) - 1
  stack = [(closure(all_columns), all_columns, 0)]

  while stack and expansions < max_expansions:
    rows, columns, start = stack.pop()
    consider(rows, columns)

    row_set = set(rows)
    children = []
    for k in range(start, n_rows):
      if k in row_set:
        continue

      new_columns = columns & masks[k]
      if bin(new_columns).count("1") < min_columns:
        continue

      expansions += 1
      new_rows = closure(new_columns)

      # canonicity: no row before k may be added by the closure
      if any(r < k and r not in row_set for r in new_rows):
        continue

      children.append((new_rows, new_columns, k + 1))

      if expansions >= max_expansions:
        LOGGER.debug("Biclique enumeration stopped after %s expansions", expansions)
        break

    stack.extend(reversed(children))

  return best


#
# Edge-list files
#

def read_edge_list(source: typing.Union[str, typing.IO], n: int, undirected: bool = True) -> Network:
  '''Reads an edge list: a `from,to` header followed by one edge per line given as two
  1-based unit ids. Each line `i,j` means that `j` affects `i`; undirected edge lists are
  symmetrized.'''

  try:
    table = pd.read_csv(source, dtype=str, skipinitialspace=True)
  except pd.errors.EmptyDataError as e:
    raise ValueError("Edge list is empty; expected a 'from,to' header") from e
  except pd.errors.ParserError as e:
    raise ValueError(f"Malformed edge list: {e}") from e

  if tuple(c.strip() for c in table.columns) != EDGE_LIST_COLUMNS:
    raise ValueError(f"Edge list header must be '{','.join(EDGE_LIST_COLUMNS)}'")

  edges = []
  for row_index, (source_id, target_id) in enumerate(table.itertuples(index=False, name=None)):
    line = row_index + 2
    try:
      i, j = int(source_id), int(target_id)
    except (TypeError, ValueError) as e:
      raise ValueError(f"Invalid unit id at line {line}") from e
    if not (1 <= i <= n and 1 <= j <= n):
      raise ValueError(f"Unit id outside [1, {n}] at line {line}")
    if i == j:
      raise ValueError(f"Self-loop at line {line}")
    edges.append((i - 1, j - 1))

  return Network.from_edges(n, edges, undirected=undirected)


def write_edge_list(net: Network, sink: typing.Union[str, typing.IO], undirected: bool = True):
  '''Writes `net` as an edge list with 1-based ids. Undirected networks are written with one
  line per unordered pair.'''

  if undirected and not net.is_symmetric():
    raise ValueError("Only symmetric networks can be written as undirected edge lists")

  edges = [(i + 1, j + 1) for i, j in net.edges() if not undirected or i < j]

  table = pd.DataFrame(edges, columns=list(EDGE_LIST_COLUMNS), dtype=np.int64)
  table.to_csv(sink, index=False, lineterminator="\n")
