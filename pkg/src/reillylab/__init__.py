"""Numerical checks of weighted Reilly-type identities, spectra and inequalities
for differential forms on balls, annuli and ellipsoids."""
from .reports import artifact_version

__version__ = artifact_version()
