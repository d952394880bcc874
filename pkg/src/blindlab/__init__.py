"""Blind signatures, the ROS attack, exact lattice tools, a Fiat-Shamir-with-aborts
signature, lattice blind-issuance algebra and an eCash simulator."""

__version__ = "0.1.0"
