"""Covers, generic words and the constructed points with divergent paired orbital measures."""

from .words import (Word, PeriodicWord, FreqOracle, PeriodicOracle, EmpiricalOracle,
                    SymbolicError, chacon_block, chacon_oracle, as_word)
from .generic import (GenericResult, StrongResult, is_eps_generic, is_strongly_generic,
                      lemma10_check, window_generic_mask)
from .covers import (CoverSpec, CoverCheck, PruneResult, is_cover, prune_cover,
                     periodic_tall_cover, union_mass, cylinder_mass)
from .construct import (BlockLayout, ConstructedPoint, PreconditionError, build_hochman_point,
                        build_simple_point, periodic_hochman_instance, typical_points,
                        aligned_blocks)
from .orbital import EmpiricalMeasure, PairOrbitalResult, orbital_measure, pair_orbital_measures
