"""Review-spam detection with a jointly trained autoencoder and soft
decision forest: feature engineering, nonparametric feature screening,
end-to-end gradient training, evaluation metrics, and a batch CLI."""

__version__ = "0.1.0"
