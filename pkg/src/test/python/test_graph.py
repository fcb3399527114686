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

"""Unit tests for the network module"""

# pylint: disable=R0201,C0115,C0116,W0212

import io
import unittest

import networkx as nx
import numpy as np

from netcrt.assignment import derive_rng
from netcrt.graph import (BicliqueScore, Network, best_biclique, common_friend_graph, erdos_renyi,
                          greedy_independent_set, improve_independent_set, paired_network,
                          read_edge_list, write_edge_list)


def _path(n: int) -> Network:
  return Network.from_edges(n, [(i, i + 1) for i in range(n - 1)], undirected=True)


def _is_independent_set(g: nx.Graph, vertices) -> bool:
  vertices = set(vertices)
  return all(not (set(g.neighbors(v)) & vertices) for v in vertices)


def _is_maximal(g: nx.Graph, vertices) -> bool:
  vertices = set(vertices)
  return all(set(g.neighbors(v)) & vertices for v in set(g.nodes()) - vertices)


class NetworkTest(unittest.TestCase):

  def test_peers(self):
    net = _path(4)
    self.assertEqual(net.peers(1), frozenset((0, 2)))
    self.assertEqual(net.peer_list(2), (1, 3))
    self.assertEqual(net.closed_neighborhood(0), frozenset((0, 1)))
    self.assertEqual(net.degree(3), 1)
    self.assertListEqual(net.degrees().tolist(), [1, 2, 2, 1])
    self.assertTrue(net.is_symmetric())
    self.assertEqual(net.edge_count(), 6)

  def test_directed_edges(self):
    net = Network.from_edges(3, [(0, 1)])
    self.assertEqual(net.peers(0), frozenset((1,)))
    self.assertEqual(net.peers(1), frozenset())
    self.assertFalse(net.is_symmetric())

  def test_self_loop(self):
    with self.assertRaises(ValueError):
      Network.from_edges(3, [(1, 1)])

  def test_bad_index(self):
    with self.assertRaises(IndexError):
      Network.from_edges(3, [(0, 3)])

    with self.assertRaises(IndexError):
      _path(3).peers(5)

  def test_peer_counts(self):
    net = _path(4)
    z = np.array([1, 0, 1, 1])
    self.assertListEqual(net.peer_counts(z).tolist(), [0, 2, 1, 1])
    self.assertListEqual(net.peer_counts(z, [1, 3]).tolist(), [2, 1])

  def test_equality(self):
    self.assertEqual(_path(5), _path(5))
    self.assertNotEqual(_path(5), Network.empty(5))
    self.assertEqual(hash(_path(5)), hash(_path(5)))

  def test_dense(self):
    self.assertListEqual(_path(3).to_dense().tolist(), [[0, 1, 0], [1, 0, 1], [0, 1, 0]])

    with self.assertRaises(ValueError):
      Network.empty(100).to_dense()


class ErdosRenyiTest(unittest.TestCase):

  def test_extreme_probabilities(self):
    self.assertEqual(erdos_renyi(10, 0.0, derive_rng(1)).edge_count(), 0)
    self.assertEqual(erdos_renyi(10, 1.0, derive_rng(1)).edge_count(), 90)

  def test_reproducible(self):
    a = erdos_renyi(50, 0.1, derive_rng(7))
    b = erdos_renyi(50, 0.1, derive_rng(7))
    self.assertEqual(a, b)
    self.assertTrue(a.is_symmetric())

  def test_mean_degree(self):
    net = erdos_renyi(400, 3 / 400, derive_rng(3))
    self.assertAlmostEqual(float(net.degrees().mean()), 3.0, delta=0.5)

  def test_bad_probability(self):
    with self.assertRaises(ValueError):
      erdos_renyi(10, 1.5, derive_rng(1))


class PairedNetworkTest(unittest.TestCase):

  def test_pairs(self):
    net = paired_network(6)
    for k in range(0, 6, 2):
      self.assertEqual(net.peers(k), frozenset((k + 1,)))
      self.assertEqual(net.peers(k + 1), frozenset((k,)))

  def test_odd_size(self):
    with self.assertRaises(ValueError):
      paired_network(5)


class GraphAlgorithmsTest(unittest.TestCase):

  def test_common_friend_graph(self):
    g = common_friend_graph(_path(4), range(4))
    self.assertSetEqual(
      {tuple(sorted(e)) for e in g.edges()},
      {(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)}
    )

  def test_common_friend_graph_subset(self):
    g = common_friend_graph(_path(6), [0, 3, 5])
    self.assertSetEqual(set(g.nodes()), {0, 3, 5})
    self.assertSetEqual({tuple(sorted(e)) for e in g.edges()}, {(3, 5)})

  def test_greedy_independent_set(self):
    net = erdos_renyi(60, 0.08, derive_rng(11))
    g = common_friend_graph(net, range(net.n))
    independent_set = greedy_independent_set(g, derive_rng(5))

    self.assertTrue(_is_independent_set(g, independent_set))
    self.assertTrue(_is_maximal(g, independent_set))

  def test_greedy_independent_set_empty_graph(self):
    g = common_friend_graph(Network.empty(5), range(5))
    self.assertSetEqual(greedy_independent_set(g, derive_rng(1)), set(range(5)))

  def test_swap_on_path(self):
    g = nx.path_graph(3)
    self.assertSetEqual(improve_independent_set(g, {1}, derive_rng(1)), {0, 2})

  def test_swap_on_star(self):
    g = nx.star_graph(4)
    self.assertSetEqual(improve_independent_set(g, {0}, derive_rng(1)), {1, 2, 3, 4})

  def test_improved_set_is_maximal(self):
    net = erdos_renyi(60, 0.08, derive_rng(11))
    g = common_friend_graph(net, range(net.n))
    greedy = greedy_independent_set(g, derive_rng(5))

    improved = improve_independent_set(g, greedy, derive_rng(6), rounds=500)

    self.assertTrue(_is_independent_set(g, improved))
    self.assertTrue(_is_maximal(g, improved))
    self.assertGreaterEqual(len(improved), len(greedy))

  def test_improvement_beyond_swaps(self):
    # {1, 3} admits no (1, 2)-swap on a 5-vertex path
    g = nx.path_graph(5)
    self.assertSetEqual(improve_independent_set(g, {1, 3}, derive_rng(2)), {1, 3})
    self.assertSetEqual(improve_independent_set(g, {1, 3}, derive_rng(2), rounds=1), {0, 2, 4})

  def test_improve_rejects_dependent_set(self):
    with self.assertRaises(ValueError):
      improve_independent_set(nx.path_graph(3), {0, 1}, derive_rng(1))

  def test_improve_empty_graph(self):
    self.assertSetEqual(improve_independent_set(nx.Graph(), set(), derive_rng(1), rounds=10), set())

  def test_best_biclique(self):
    adjacency = np.array([
      [1, 1, 1],
      [1, 1, 1],
      [1, 0, 0]
    ], dtype=bool)

    biclique = best_biclique(adjacency, min_rows=2, min_columns=2, score=BicliqueScore.area)
    self.assertEqual(biclique.rows, (0, 1))
    self.assertEqual(biclique.columns, (0, 1, 2))
    self.assertEqual(biclique.score, 6.0)

    biclique = best_biclique(adjacency, min_rows=3, min_columns=1, score=BicliqueScore.area)
    self.assertEqual(biclique.rows, (0, 1, 2))
    self.assertEqual(biclique.columns, (0,))

  def test_best_biclique_none(self):
    adjacency = np.eye(3, dtype=bool)
    self.assertIsNone(best_biclique(adjacency, min_rows=2, min_columns=2))

  def test_biclique_is_complete(self):
    rng = derive_rng(21)
    adjacency = rng.random((12, 20)) < 0.6
    biclique = best_biclique(adjacency, min_rows=2, min_columns=2)
    self.assertIsNotNone(biclique)
    self.assertTrue(adjacency[np.ix_(biclique.rows, biclique.columns)].all())

  def test_score_names(self):
    self.assertIs(BicliqueScore.by_name("units"), BicliqueScore.units)
    with self.assertRaises(ValueError):
      BicliqueScore.by_name("volume")


class EdgeListTest(unittest.TestCase):

  def test_read(self):
    net = read_edge_list(io.StringIO("from,to\n1,2\n2,3\n"), 4)
    self.assertEqual(net, Network.from_edges(4, [(0, 1), (1, 2)], undirected=True))

  def test_read_directed(self):
    net = read_edge_list(io.StringIO("from,to\n1,2\n"), 2, undirected=False)
    self.assertEqual(net.peers(0), frozenset((1,)))
    self.assertEqual(net.peers(1), frozenset())

  def test_read_file(self):
    net = read_edge_list("src/test/resources/data/example_edges.csv", 8)
    self.assertEqual(net.peers(3), frozenset((2, 4)))
    self.assertEqual(net.peers(7), frozenset((4,)))

  def test_bad_header(self):
    with self.assertRaises(ValueError):
      read_edge_list(io.StringIO("source,target\n1,2\n"), 2)

  def test_bad_id(self):
    with self.assertRaisesRegex(ValueError, "line 3"):
      read_edge_list(io.StringIO("from,to\n1,2\n1,5\n"), 4)

    with self.assertRaisesRegex(ValueError, "line 2"):
      read_edge_list(io.StringIO("from,to\n1,x\n"), 4)

  def test_self_loop(self):
    with self.assertRaisesRegex(ValueError, "Self-loop"):
      read_edge_list(io.StringIO("from,to\n2,2\n"), 4)

  def test_write(self):
    sink = io.StringIO()
    write_edge_list(_path(3), sink)
    self.assertEqual(sink.getvalue(), "from,to\n1,2\n2,3\n")

  def test_write_asymmetric(self):
    with self.assertRaises(ValueError):
      write_edge_list(Network.from_edges(2, [(0, 1)]), io.StringIO())


if __name__ == '__main__':
  unittest.main()
