"""Dynamically re-keyed switching-and-toggling network channel.

Library layout:

* cstn: the configurable switching network (build, apply, invert,
  mirror reuse, affine extraction, permutation coverage);
* sbox: the involutional byte substitution layer;
* acorn / trivium: the AEAD sealing configurations in transit and the
  seeded keystream generator behind every random draw;
* rng / health: entropy sources, health-tested reseeding;
* protocol: framing and the re-keyed session state machines;
* satattack: oracle-guided key recovery and the empirical re-key bound;
* costmodel / plotting: cycle, time, and energy model with reports.
"""

from . import acorn, costmodel, cstn, health, protocol, rng, satattack, sbox, trivium

__version__ = "0.1.0"

__all__ = [
    "acorn", "costmodel", "cstn", "health", "protocol",
    "rng", "satattack", "sbox", "trivium", "__version__",
]
