"""Spatial graph convolutional networks on a small numpy autodiff core."""
from ._accel import backend
from .graph import GraphBatch, SpatialGraph, batch, build_grid_graph, knn_graph, split
from .layers import LayerMode, SgcnLayerParams, SgcnModel, layer_forward, model_forward, spatial_aggregate
from .tensor import Tensor, backward, grad_check

__version__ = "0.1.0"
