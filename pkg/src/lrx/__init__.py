"""Search, learning and analysis tools for the LRX Cayley graphs of S_n."""

__version__ = "0.1.0"
