import json

import pytest


VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
         "the", "a", "i", "you", "he", "she", "we", "they",
         "stop", "go", "walk", "run", "hit", "help", "tea", "kettle",
         "shout", "scream", "afraid", "call", "hands", "off", "me",
         "is", "was", "not", "very", "##ing", "##s", "##ed"]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small randomly initialized 768-dim encoder saved to disk, so the
    exporter can be exercised without downloading any weights."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    model_dir = tmp_path_factory.mktemp("tiny_model")
    vocab_file = model_dir / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_file))
    tokenizer.save_pretrained(model_dir)

    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=768,
        num_hidden_layers=1,
        num_attention_heads=4,
        intermediate_size=128,
        max_position_embeddings=512,
    )
    BertModel(config).save_pretrained(model_dir)
    return model_dir


@pytest.fixture()
def manifest_file(tmp_path):
    rows = [
        {"id": "seg000", "transcript": "stop shouting you are scaring me"},
        {"id": "seg001", "transcript": "i will put the kettle on"},
        {"id": "seg002", "transcript": "take your hands off me"},
        {"id": "seg003", "transcript": "we could go for a walk"},
        {"id": "seg004", "transcript": "call for help now"},
    ]
    path = tmp_path / "manifest.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path
