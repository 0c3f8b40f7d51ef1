import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import (
    BertConfig,
    BertForMaskedLM,
    GPT2Config,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
    T5Config,
    T5ForConditionalGeneration,
)

WORDS = [
    "the", "a", "cat", "dog", "sat", "ran", "on", "mat", "rug", "blue",
    "red", "green", "fast", "slow", "big", "small", "bird", "flew", "home",
    "city", "park", "tree", "river", "cold", "warm", "night", "day", "moon",
    "sun", "star", "wind", "rain",
]


def build_tokenizer():
    vocab = {"[PAD]": 0, "[UNK]": 1, "[MASK]": 2, "<s>": 3, "</s>": 4}
    for word in WORDS:
        vocab[word] = len(vocab)
    tok = Tokenizer(models.WordLevel(vocab=vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    return PreTrainedTokenizerFast(
        tokenizer_object=tok,
        unk_token="[UNK]",
        pad_token="[PAD]",
        mask_token="[MASK]",
        bos_token="<s>",
        eos_token="</s>",
    )


@pytest.fixture(scope="session")
def tokenizer():
    return build_tokenizer()


@pytest.fixture(scope="session")
def vocab_size(tokenizer):
    return len(tokenizer)


def fresh_causal_model(vocab_size, seed=0):
    torch.manual_seed(seed)
    return GPT2LMHeadModel(
        GPT2Config(
            vocab_size=vocab_size,
            n_positions=64,
            n_embd=32,
            n_layer=2,
            n_head=2,
            bos_token_id=3,
            eos_token_id=4,
        )
    )


@pytest.fixture()
def causal_model(vocab_size):
    return fresh_causal_model(vocab_size)


@pytest.fixture()
def masked_model(vocab_size):
    torch.manual_seed(1)
    return BertForMaskedLM(
        BertConfig(
            vocab_size=vocab_size,
            hidden_size=32,
            num_hidden_layers=2,
            num_attention_heads=2,
            intermediate_size=64,
            max_position_embeddings=64,
        )
    )


@pytest.fixture()
def encdec_model(vocab_size):
    torch.manual_seed(2)
    return T5ForConditionalGeneration(
        T5Config(
            vocab_size=vocab_size,
            d_model=32,
            d_ff=64,
            num_layers=2,
            num_heads=2,
            d_kv=16,
            decoder_start_token_id=0,
            pad_token_id=0,
            eos_token_id=4,
        )
    )
