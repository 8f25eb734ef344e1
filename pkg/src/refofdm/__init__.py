"""Reconfigurable filtered-OFDM baseband toolkit.

A single fixed-coefficient FIR prototype retuned by coefficient decimation
drives an eight-bandwidth OFDM physical layer for L-band inlay deployments,
together with the channel, interference, and analysis machinery needed to
evaluate it.
"""

__version__ = "0.1.0"
