"""
Purpose: Splits sample text into chunks on end-of-chunk tokens and aligns media tokens with media paths
"""
import re
from typing import Dict, List, Optional, Tuple

from src.core.exceptions import TokenMismatch
from src.core.models.sample import Chunk, Sample, SchemaTokens


class ChunkParser:
    """Parses the token-aligned layout of a sample's ``text`` field"""

    def __init__(self, tokens: Optional[SchemaTokens] = None):
        """Initialize the parser with the schema's special tokens"""
        self.tokens = tokens or SchemaTokens()
        by_token = {token: modality for modality, token in self.tokens.media_tokens().items()}
        self._modality_of: Dict[str, str] = by_token
        self._media_pattern = re.compile("|".join(re.escape(t) for t in by_token))

    def count_tokens(self, text: str) -> Dict[str, int]:
        """Count media tokens per modality"""
        counts = {modality: 0 for modality in self.tokens.media_tokens()}
        for match in self._media_pattern.finditer(text):
            counts[self._modality_of[match.group(0)]] += 1
        return counts

    def check_alignment(self, sample: Sample) -> None:
        """
        Check that every media token has exactly one path.

        Raises:
            TokenMismatch: naming the first modality whose counts disagree
        """
        for modality, count in self.count_tokens(sample.text).items():
            paths = len(sample.media(modality))
            if count != paths:
                raise TokenMismatch(modality, tokens=count, paths=paths)

    def split_spans(self, text: str) -> List[Tuple[int, int]]:
        """Chunk spans, excluding the eoc tokens; a trailing eoc opens no extra chunk"""
        eoc = self.tokens.eoc_token
        spans = []
        start = 0
        while True:
            index = text.find(eoc, start)
            if index < 0:
                break
            spans.append((start, index))
            start = index + len(eoc)
        if start < len(text) or not spans:
            spans.append((start, len(text)))
        return spans

    def parse(self, sample: Sample) -> List[Chunk]:
        """
        Parse a sample into chunks.

        Args:
            sample: The sample to parse

        Returns:
            List[Chunk]: chunks in document order; the k-th token of a modality
            overall refers to index k of that modality's path list

        Raises:
            TokenMismatch: If token counts disagree with media list lengths
        """
        self.check_alignment(sample)
        counters = {modality: 0 for modality in self.tokens.media_tokens()}
        chunks = []
        for start, end in self.split_spans(sample.text):
            refs = []
            for match in self._media_pattern.finditer(sample.text, start, end):
                modality = self._modality_of[match.group(0)]
                refs.append((modality, counters[modality]))
                counters[modality] += 1
            chunks.append(Chunk(text_span=(start, end), media_refs=refs))
        return chunks

    def join(self, text: str, chunks: List[Chunk]) -> str:
        """Reassemble text from chunk spans"""
        eoc = self.tokens.eoc_token
        joined = eoc.join(text[s:e] for s, e in (c.text_span for c in chunks))
        if text.endswith(eoc) and chunks and chunks[-1].text_span[1] < len(text):
            joined += eoc
        return joined


def parse_chunks(sample: Sample, tokens: Optional[SchemaTokens] = None) -> List[Chunk]:
    return ChunkParser(tokens).parse(sample)
