"""Multi-agent RL lab: suggestion-sharing agents, social-dilemma environments,
baseline sharing schemes, and exact verification of the underlying bounds."""

__version__ = "0.1.0"
