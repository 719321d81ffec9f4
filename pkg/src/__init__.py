"""
Online Deadline Scheduling Toolkit

Simulation, exact optimum, charging audits and adaptive lower-bound adversaries
for preemptive single-machine scheduling with deadlines.
"""

__version__ = "1.0.0"
__author__ = "Scheduling Toolkit Team"
