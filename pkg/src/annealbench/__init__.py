"""Desk-scale benchmarking of annealing hardware on graph-coloring problems.

Coloring instances become QUBOs, are minor-embedded into Chimera or Pegasus
hardware graphs and sampled by simulated annealing (or replayed from file);
time-to-solution statistics and exponential scaling fits follow.
"""

__version__ = "0.1.0"
