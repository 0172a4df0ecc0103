# -*- coding: utf-8 -*-
"""
JSON codec for the objects a run persists: EvalReport (report.json, the
sql storage plugin) and EnsembleWeights (ensemble.json next to the model
weights). Objects are wrapped as ``{"__ClassName__": payload}``.
"""
import json

from cardioquant.objects import EvalReport, EnsembleWeights


class ReportEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, EvalReport):
            return {'__EvalReport__': obj.get_raw_data()}
        if isinstance(obj, EnsembleWeights):
            return {'__EnsembleWeights__': {
                'coefficients': obj.get_dict(),
                'n_samples': obj.n_samples,
                'metadata': obj.metadata}}
        return json.JSONEncoder.default(self, obj)


def _from_json(rdict):
    if '__EvalReport__' in rdict:
        return EvalReport(rdict['__EvalReport__'])
    if '__EnsembleWeights__' in rdict:
        payload = rdict['__EnsembleWeights__']
        per_index = payload['coefficients']
        names = list(per_index.keys())
        coef = [[per_index[n]['w_direct'], per_index[n]['w_seg'],
                 per_index[n]['b']] for n in names]
        residuals = [per_index[n]['residual'] for n in names]
        return EnsembleWeights(coef, payload.get('n_samples', 0), residuals,
                               payload.get('metadata'))
    return rdict


class ReportDecoder(json.JSONDecoder):
    def decode(self, json_str):
        rdict = json.loads(json_str)
        if not isinstance(rdict, dict):
            raise ValueError("expected a JSON object")
        return _from_json(rdict)


def dumps(obj):
    """
        Deterministic serialisation: fixed key order, two-space indent.
    """
    return json.dumps(obj, cls=ReportEncoder, indent=2) + "\n"


def loads(json_str):
    return json.loads(json_str, cls=ReportDecoder)
