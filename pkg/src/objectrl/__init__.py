"""Object-centric self-supervised goal-conditioned RL on a 2D pixel pusher.

Subpackages and modules:

- ``world``: deterministic pusher environment and software renderer
- ``segmentation``: background mixture model + robot segmenter pipeline
- ``latents``: scene/object variational autoencoders and matching loss
- ``sequence``: occlusion-robust recurrent object encoder
- ``agent``: replay buffer, hindsight relabeling, soft actor-critic
- ``pipeline``: pretraining, the online training loop, evaluation
- ``studies``: diagnostic studies (correlation, retrieval, sweeps, ablations)
"""

__version__ = "0.1.0"
