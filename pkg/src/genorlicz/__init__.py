"""Numerical calculus for generalized Orlicz (Musielak-Orlicz) Phi-functions."""
