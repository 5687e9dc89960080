"""
volta command line.

Every subcommand exits 0 on success. Failures print exactly one line
`error <code> <ExceptionName>: <message>` on stderr and exit 2 for usage errors, 1 otherwise.
"""
import argparse
import dataclasses
import json
import logging
import os
import sys

from volta.harness.checkpoint import load_checkpoint
from volta.harness.evaluation import (Generator, code_count, distinct_contexts, evaluate, export_latents,
                                      generate_samples, interpolate, sweep_code)
from volta.harness.synthetic import make_synthetic_corpus, write_corpus
from volta.harness.trainer import Trainer, encode_examples, load_examples, question_context
from volta.harness.verification import run_verification
from volta.types.corpus import Task
from volta.types.defaults import Defaults
from volta.types.modelconfig import ModelMode
from volta.types.runconfig import RunConfig
from volta.util.exceptions import ConfigError, UsageError, VerificationError, VoltaException, catch_all

log = logging.getLogger(__name__)

USAGE_EXIT = 2
FAILURE_EXIT = 1


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError('%s: %s' % (self.prog, message))


def _grid(value):
    try:
        grid = [float(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError('grid must be comma-separated numbers, got %r' % value)
    if not grid:
        raise argparse.ArgumentTypeError('grid is empty')
    return grid


def _positive(value):
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError('expected an integer, got %r' % value)
    if number < 1:
        raise argparse.ArgumentTypeError('expected a positive integer, got %r' % value)
    return number


def _non_negative(value):
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError('expected an integer, got %r' % value)
    if number < 0:
        raise argparse.ArgumentTypeError('expected a non-negative integer, got %r' % value)
    return number


def build_parser():
    common = ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON RunConfig file')
    common.add_argument('--seed', type=_non_negative)
    common.add_argument('--steps', type=_non_negative)
    common.add_argument('--task', choices=[t.value for t in Task])
    common.add_argument('--mode', choices=[m.value for m in ModelMode])
    common.add_argument('--out', help='output directory')
    common.add_argument('--workers', type=_positive, default=1)
    common.add_argument('--log-level', default='WARNING', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])

    decoding = ArgumentParser(add_help=False)
    decoding.add_argument('--checkpoint', required=True)
    decoding.add_argument('--context', help='context text; defaults to the contexts of the run corpus')
    decoding.add_argument('--constrained-span', action='store_true', help='decode spans with e >= s')

    parser = ArgumentParser(prog='volta', description='Transformer VAE with latent codes at desk scale')
    commands = parser.add_subparsers(dest='command', parser_class=ArgumentParser)
    commands.required = True

    commands.add_parser('train', parents=[common], help='train a model and write checkpoints')
    generate = commands.add_parser('generate', parents=[common, decoding], help='sample outputs per context')
    generate.add_argument('--samples', type=_positive, default=Defaults.samples_per_context)
    interpolation = commands.add_parser('interpolate', parents=[common, decoding],
                                        help='decode along a line between two encoded targets')
    interpolation.add_argument('--grid', type=_grid, default=[0.0, 0.5, 1.0])
    interpolation.add_argument('--first', help='first target text')
    interpolation.add_argument('--second', help='second target text')
    sweep = commands.add_parser('sweep-code', parents=[common, decoding], help='scan one latent code')
    sweep.add_argument('--code-index', type=_non_negative, required=True)
    sweep.add_argument('--grid', type=_grid)
    evaluation = commands.add_parser('eval', parents=[common, decoding], help='metrics report')
    evaluation.add_argument('--samples', type=_positive, default=Defaults.samples_per_context)
    commands.add_parser('grad-check', parents=[common], help='finite-difference gradient verification')
    export = commands.add_parser('export-latents', parents=[common], help='CSV of posterior means')
    export.add_argument('--checkpoint', required=True)
    commands.add_parser('make-data', parents=[common], help='write the synthetic corpus')
    return parser


def _configure_logging(level):
    logger = logging.getLogger('volta')
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    logger.addHandler(handler)
    logger.setLevel(level)
    return handler


def run_config_from_args(args) -> RunConfig:
    """JSON config (or the task preset) with command line overrides applied"""
    overrides = {name: getattr(args, name) for name in ('seed', 'steps') if getattr(args, name) is not None}
    if args.config is None:
        model = {'mode': args.mode} if args.mode else {}
        return RunConfig.for_task(args.task or Task.LM, model=model, **overrides)

    try:
        with open(args.config, encoding='utf-8') as f:
            config = RunConfig.from_json(f.read())
    except OSError as e:
        raise UsageError('cannot read config %s: %s' % (args.config, e.strerror), cause=e)
    if args.task:
        task = Task(args.task)
        synthetic = dataclasses.replace(config.synthetic, task=task) if config.synthetic is not None else None
        config = dataclasses.replace(config, task=task, synthetic=synthetic)
    if args.mode:
        config = dataclasses.replace(config, model=dataclasses.replace(config.model, mode=ModelMode(args.mode)))
    if 'seed' in overrides and config.synthetic is not None:
        config = dataclasses.replace(config, synthetic=dataclasses.replace(config.synthetic, seed=args.seed))
    return dataclasses.replace(config, **overrides) if overrides else config


def _out_path(args, name):
    if args.out is None:
        return None
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _emit(args, name, payload):
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    path = _out_path(args, name)
    if path is not None:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text + '\n')


class Session:
    """A restored checkpoint with its tokenizer, run configuration and corpus"""

    def __init__(self, args):
        if not os.path.exists(args.checkpoint):
            raise UsageError('checkpoint %s does not exist' % args.checkpoint)
        self.args = args
        self.checkpoint = load_checkpoint(args.checkpoint)
        self.config = self.checkpoint.run_config
        self.model, self.tokenizer = self.checkpoint.restore()
        self.task = self.config.task
        self.__examples = None

    @property
    def examples(self):
        """Held-out examples of the run corpus, or the whole corpus when nothing was held out"""
        if self.__examples is None:
            train_set, held_out = load_examples(self.config).split(self.config.held_out)
            self.__examples = encode_examples(held_out if len(held_out) else train_set, self.tokenizer)
        return self.__examples

    def generator(self):
        return Generator(self.model, qag=self.task == Task.QAG, pipeline=self.config.qag_pipeline,
                         constrained_span=getattr(self.args, 'constrained_span', False),
                         fixed_codes=self.config.fixed_codes)

    def contexts(self):
        if getattr(self.args, 'context', None) is not None:
            return [self.tokenizer.tokenize(self.args.context)]
        return [context for _, context, _ in distinct_contexts(self.examples)]

    def text(self, ids):
        return self.tokenizer.detokenize(ids)


@catch_all
def cmd_train(args):
    config = run_config_from_args(args)
    trainer = Trainer(config, args.out or 'volta-run')
    trainer.on('checkpoint', lambda path, step: log.info(f'cmd_train(): checkpoint {path} at step {step}'))
    result = trainer.train()
    last = result.reports[-1].as_dict() if result.reports else None
    _emit(args, 'summary.json', {'steps': result.checkpoint.step, 'last_report': last,
                                 'checkpoint': os.path.join(trainer.out_dir, Defaults.checkpoint_file)})


@catch_all
def cmd_generate(args):
    session = Session(args)
    contexts = session.contexts()
    outputs = generate_samples(session.generator(), contexts, args.samples, session.config.seed, args.workers)
    records = [{'context': session.text(context), 'samples': [o.as_record(session.tokenizer) for o in generated]}
               for context, generated in zip(contexts, outputs)]
    _emit(args, 'generations.json', records)


@catch_all
def cmd_interpolate(args):
    session = Session(args)
    if not all(0.0 <= a <= 1.0 for a in args.grid):
        raise UsageError('interpolate: every alpha must lie in [0, 1]')
    if args.first is not None and args.second is not None:
        context = session.contexts()[0]
        first, second = session.tokenizer.tokenize(args.first), session.tokenizer.tokenize(args.second)
    else:
        if len(session.examples) < 2:
            raise UsageError('interpolate: the corpus needs two examples; pass --first and --second')
        a, b = session.examples[0], session.examples[1]
        context = a.context if args.context is None else session.tokenizer.tokenize(args.context)
        first, second = a.target, b.target
    if not first or not second:
        raise UsageError('interpolate: empty target text')
    generator = session.generator()
    outputs = interpolate(generator, context, first, second, args.grid, session.config.seed)
    _emit(args, 'interpolation.json', {'context': session.text(context), 'first': session.text(first),
                                       'second': session.text(second),
                                       'outputs': [o.as_record(session.tokenizer) for o in outputs]})


@catch_all
def cmd_sweep_code(args):
    session = Session(args)
    n_codes = code_count(session.model.config)
    if args.code_index >= n_codes:
        raise UsageError('sweep-code: --code-index %d outside the %d codes of this model'
                         % (args.code_index, n_codes))
    context = session.contexts()[0]
    outputs = sweep_code(session.generator(), context, args.code_index, args.grid, session.config.seed)
    _emit(args, 'sweep.json', {'context': session.text(context), 'code_index': args.code_index,
                               'outputs': [o.as_record(session.tokenizer) for o in outputs]})


@catch_all
def cmd_eval(args):
    session = Session(args)
    examples = session.examples
    if session.task == Task.QAG:
        decoder_contexts = [question_context(e.context, e.answer, session.config.qag_pipeline) for e in examples]
    else:
        decoder_contexts = [e.context for e in examples]
    report = evaluate(session.generator(), examples, decoder_contexts, args.samples, session.config.seed,
                      args.workers)
    log.info('cmd_eval():\n' + report.table())
    _emit(args, 'metrics.json', report.to_json())


@catch_all
def cmd_grad_check(args):
    seed = args.seed or 0
    results = run_verification(seed)
    _emit(args, 'grad_check.txt', '\n'.join(r.line() for r in results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise VerificationError('gradient check failed for %s' % ', '.join(failed))


@catch_all
def cmd_export_latents(args):
    session = Session(args)
    path = _out_path(args, 'latents.csv') or 'latents.csv'
    export_latents(session.model, session.examples, path, session.config.seed)
    print(path)


@catch_all
def cmd_make_data(args):
    config = run_config_from_args(args)
    if config.synthetic is None:
        raise ConfigError('make-data needs a synthetic corpus specification')
    examples = make_synthetic_corpus(config.synthetic)
    name = 'corpus.json' if config.task == Task.QAG else 'corpus.txt'
    path = _out_path(args, name) or name
    write_corpus(examples, path)
    print(path)


HANDLERS = {
    'train': cmd_train,
    'generate': cmd_generate,
    'interpolate': cmd_interpolate,
    'sweep-code': cmd_sweep_code,
    'eval': cmd_eval,
    'grad-check': cmd_grad_check,
    'export-latents': cmd_export_latents,
    'make-data': cmd_make_data,
}


def main(argv=None):
    handler = None
    try:
        args = build_parser().parse_args(argv)
        handler = _configure_logging(args.log_level)
        HANDLERS[args.command](args)
        return 0
    except VoltaException as e:
        if not isinstance(e, UsageError) and isinstance(e.cause, FileNotFoundError):
            e = UsageError(e.message, cause=e.cause)
        print(e.one_line(), file=sys.stderr)
        return USAGE_EXIT if isinstance(e, UsageError) else FAILURE_EXIT
    finally:
        if handler is not None:
            logging.getLogger('volta').removeHandler(handler)


def run():
    sys.exit(main())
