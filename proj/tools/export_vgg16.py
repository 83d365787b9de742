"""Export torchvision VGG16 features up to relu3_3 for the perceptual loss.

The output file is loaded by the C++ perceptual encoder (perceptual_encoder
"vgg16", perceptual_weights <path>).

    python3 tools/export_vgg16.py vgg16_relu3_3.pt
    python3 tools/export_vgg16.py --untrained /tmp/layout_check.pt   # offline layout check
"""
import argparse

import torch
import torchvision


class Features(torch.nn.Module):
    def __init__(self, features):
        super().__init__()
        self.features = features

    def forward(self, x):
        return self.features(x)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("output")
    ap.add_argument("--untrained", action="store_true", help="skip the weight download")
    args = ap.parse_args()

    weights = None if args.untrained else torchvision.models.VGG16_Weights.IMAGENET1K_V1
    vgg = torchvision.models.vgg16(weights=weights)
    # features[0:16] ends at relu3_3
    module = Features(vgg.features[:16]).eval()
    torch.jit.script(module).save(args.output)


if __name__ == "__main__":
    main()
