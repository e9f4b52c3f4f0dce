"""Parameter estimation for rectified Gaussian (one-layer ReLU) generative models."""
