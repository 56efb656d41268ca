"""Compile variational forms to tensor-contraction kernels and assemble them on simplicial meshes."""

__version__ = "0.1.0"
