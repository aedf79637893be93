"""MASFIN: multi-agent equity forecasting pipeline.

Five sequential crews (postmortem, screening, analysis, timing, portfolio)
turn a pinned market-data snapshot into a 15-30 position weekly portfolio,
with human-in-the-loop checkpoints between stages and explicit gates against
survivorship and look-ahead bias.
"""

__version__ = "0.1.0"
