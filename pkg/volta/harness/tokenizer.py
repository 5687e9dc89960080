import logging
import string

from volta.types.defaults import Defaults
from volta.util.exceptions import SpecError

log = logging.getLogger(__name__)

CONTINUATION = '##'
SEP_TOKEN = Defaults.special_tokens[Defaults.sep_id]
UNK_TEXT = '�'

_FALLBACK_CHARACTERS = string.ascii_letters + string.digits + string.punctuation


class Tokenizer:
    """
    Whitespace tokenizer over a closed vocabulary with a per-character fallback.

    Ids 0–4 are BOS, EOS, PAD, SEP and UNK. A word outside the vocabulary is spelt as its first
    character followed by `##`-prefixed continuation characters; a character outside the
    vocabulary becomes UNK, which detokenizes to U+FFFD.
    """

    def __init__(self, vocabulary):
        vocabulary = list(vocabulary)
        if vocabulary[:len(Defaults.special_tokens)] != Defaults.special_tokens:
            raise SpecError('Tokenizer: vocabulary must start with %s' % Defaults.special_tokens)
        if len(set(vocabulary)) != len(vocabulary):
            raise SpecError('Tokenizer: duplicate vocabulary entries')
        self.__vocabulary = vocabulary
        self.__ids = {token: i for i, token in enumerate(vocabulary)}

    @staticmethod
    def build(words, characters=_FALLBACK_CHARACTERS):
        """Vocabulary of the sorted distinct words plus plain and continuation forms of every character"""
        vocabulary = list(Defaults.special_tokens)
        seen = set(vocabulary)
        distinct_words = sorted(set(words))
        alphabet = sorted(set(characters).union(*[set(w) for w in distinct_words]))
        for token in distinct_words + alphabet + [CONTINUATION + ch for ch in alphabet]:
            if token not in seen:
                seen.add(token)
                vocabulary.append(token)
        return Tokenizer(vocabulary)

    @property
    def vocabulary(self):
        return list(self.__vocabulary)

    def __len__(self):
        return len(self.__vocabulary)

    def __contains__(self, token):
        return token in self.__ids

    def token_id(self, token):
        return self.__ids.get(token, Defaults.unk_id)

    def encode_words(self, words):
        ids = []
        for word in words:
            if word in self.__ids:
                ids.append(self.__ids[word])
                continue
            ids.append(self.token_id(word[0]))
            ids.extend(self.token_id(CONTINUATION + ch) for ch in word[1:])
        return ids

    def tokenize(self, text):
        return self.encode_words(text.split())

    def decode_words(self, ids):
        words = []
        for token_id in ids:
            if token_id in (Defaults.bos_id, Defaults.eos_id, Defaults.pad_id):
                continue
            if not 0 <= token_id < len(self.__vocabulary) or token_id == Defaults.unk_id:
                token = UNK_TEXT
            else:
                token = self.__vocabulary[token_id]
            if token.startswith(CONTINUATION) and len(token) > len(CONTINUATION) and words:
                words[-1] += token[len(CONTINUATION):]
            else:
                words.append(token)
        return words

    def detokenize(self, ids):
        return ' '.join(self.decode_words(ids))
