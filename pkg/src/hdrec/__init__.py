"""hdrec: desk-scale hybrid-dose tomography experimentation kit.

Simulate normal-/low-dose projections from phantoms, train a residual U-Net
projection denoiser on sparse low-/normal-dose pairs, reconstruct with
filtered backprojection or TV regularization, and quantify when hybrid dose
allocation beats uniform allocation at a fixed photon budget.
"""

__version__ = "0.1.0"
