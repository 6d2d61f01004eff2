"""Render the three case-study figures from their CSV contracts.

The renderer never recomputes anything: it reads the CSVs the simulation
CLI emits (field snapshots ``t,x,u``, boundary traces ``t,y`` and detection
traces ``t,y,yhat,r,psi1,W,norm_u,norm_ux,norm_eta_H,delta,flag``) and draws

* figure 1 - the distributed response as a time/space heatmap,
* figure 2 - two boundary traces overlaid,
* figure 3 - residual traces with the threshold line and detection marker.
"""

from .core import CsvFormatError, FigureSpec, render

__all__ = ["CsvFormatError", "FigureSpec", "render"]
