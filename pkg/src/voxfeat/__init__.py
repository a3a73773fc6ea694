"""Acoustic voice-quality features from glottal pressure signals, with
correlation, boxplot and LDA/SVM classification tooling."""

__version__ = "0.1.0"
