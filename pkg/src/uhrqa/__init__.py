"""uhrqa: quality assessment and curation for ultra-high-resolution images.

Submodules:
  imgcore   decoding, grayscale, patch grids, resampling, quantization
  purify    the five preliminary purification detectors and cohort gate
  srqa      upscale tiering, seam inspection, consistency, hybrid sampling
  metrics   GLCM score, RAPS, Frechet distances, PSNR/SSIM, NMS, crops
  judge     MLLM-as-judge client, prompt templates, MSFI/ICS aggregation
  pipeline  manifest orchestration, dataflow accounting, benchmark rows
  cli       command-line entry point
"""

__version__ = "0.1.0"
