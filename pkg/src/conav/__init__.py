"""Multi-room grid-world simulator and decentralized multi-agent planning library."""

__version__ = "0.1.0"
