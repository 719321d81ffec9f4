"""
Deadline Scheduling Toolkit Test Suite

Coverage for all components:
- Domain models and text formats
- Simulator, policies and post-hoc trace checks
- Exact optimum and its exhaustive certificate
- Charging audits and adaptive adversaries
- Experiment harness and command line
"""

__version__ = "1.0.0"
