"""GAN discriminator feature geometry laboratory."""

__version__ = "0.1.0"
