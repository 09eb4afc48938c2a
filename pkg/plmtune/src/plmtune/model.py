"""A small transformer encoder with a single-logit classification head.

The default checkpoint is built from scratch ("local-tiny"): in this
environment there is no model hub access, so the encoder starts from random
weights and the whole benefit comes from supervised training on the export.
A hub checkpoint name can be passed instead when network access exists.
"""

import math

import torch
from torch import nn

from .data import PAD_ID


class TinyEncoderClassifier(nn.Module):
    def __init__(self, vocab_size: int, max_len: int = 512, d_model: int = 64,
                 n_heads: int = 4, n_layers: int = 2, d_ff: int = 128,
                 dropout: float = 0.1):
        super().__init__()
        self.max_len = max_len
        self.embedding = nn.Embedding(vocab_size, d_model, padding_idx=PAD_ID)
        self.positional = nn.Embedding(max_len, d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=d_model, nhead=n_heads, dim_feedforward=d_ff,
            dropout=dropout, batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=n_layers,
                                             enable_nested_tensor=False)
        self.head = nn.Linear(d_model, 1)
        self._init_weights()

    def _init_weights(self):
        nn.init.normal_(self.embedding.weight, std=0.02)
        nn.init.normal_(self.positional.weight, std=0.02)
        with torch.no_grad():
            self.embedding.weight[PAD_ID].zero_()

    def forward(self, input_ids: torch.Tensor) -> torch.Tensor:
        mask = input_ids.eq(PAD_ID)
        positions = torch.arange(input_ids.size(1), device=input_ids.device)
        x = self.embedding(input_ids) + self.positional(positions)[None, :, :]
        x = self.encoder(x, src_key_padding_mask=mask)
        # masked mean pool over real tokens
        keep = (~mask).float().unsqueeze(-1)
        pooled = (x * keep).sum(dim=1) / keep.sum(dim=1).clamp(min=1.0)
        return self.head(pooled).squeeze(-1)

    def encoder_parameters(self):
        for name, param in self.named_parameters():
            if not name.startswith("head."):
                yield param

    def head_parameters(self):
        return self.head.parameters()


def pad_batch(sequences: list, device=None) -> torch.Tensor:
    width = max(len(s) for s in sequences)
    batch = torch.full((len(sequences), width), PAD_ID, dtype=torch.long, device=device)
    for i, seq in enumerate(sequences):
        batch[i, : len(seq)] = torch.tensor(seq, dtype=torch.long, device=device)
    return batch
