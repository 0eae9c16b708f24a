"""betamix: a route-variation workbench for climbing route setters.

The pipeline: transcribe routes in a small hand/description notation
(`crdl`), generate chaotic variations of one or more routes by mapping
move sequences onto Lorenz trajectories (`chaos`), explore how the
variation initial condition shapes the outcome (`icmap`), parse
free-form move descriptions into semantic frames (`grammar`), reduce
frames to model symbols at four levels of detail (`symbols`), and train
variable-order Markov models that score, continue, and smooth move
sequences (`vomm`). `store` persists everything; `service` and `cli`
expose the pipeline over HTTP and the command line.
"""

__version__ = "0.1.0"

from . import chaos, crdl, grammar, icmap, store, symbols, vomm

__all__ = ["chaos", "crdl", "grammar", "icmap", "store", "symbols", "vomm", "__version__"]
