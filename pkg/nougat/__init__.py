# nougat/__init__.py
"""
Online kernel change-point detection

NOUGAT online detector, dRuLSIF / MA / GMA / k-NN baselines, closed-form
Gaussian kernel moments and analytical mean/variance models.
"""

__version__ = "0.1.0"
