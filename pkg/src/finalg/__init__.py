"""Finite algebras, their local structure, and compilers between programs over them and Boolean circuits."""
