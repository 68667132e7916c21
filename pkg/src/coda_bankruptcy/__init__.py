"""Standard Altman-type ratios versus pairwise log-ratios for bankruptcy prediction."""

__version__ = "0.1.0"
