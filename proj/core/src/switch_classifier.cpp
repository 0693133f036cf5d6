#include "scnn/switch_classifier.hpp"

#include <stdexcept>

namespace scnn {

SwitchBackbone parse_backbone(const std::string& name) {
  if (name == "cnn_small") return SwitchBackbone::kCnnSmall;
  if (name == "vgg16_style") return SwitchBackbone::kVgg16Style;
  if (name == "vgg19_style") return SwitchBackbone::kVgg19Style;
  if (name == "resnet_style") return SwitchBackbone::kResnetStyle;
  throw std::invalid_argument("unknown switch backbone: " + name);
}

std::string backbone_name(SwitchBackbone b) {
  switch (b) {
    case SwitchBackbone::kCnnSmall: return "cnn_small";
    case SwitchBackbone::kVgg16Style: return "vgg16_style";
    case SwitchBackbone::kVgg19Style: return "vgg19_style";
    case SwitchBackbone::kResnetStyle: return "resnet_style";
  }
  throw std::invalid_argument("invalid backbone enum");
}

namespace {

// Appends conv-relu blocks with pools after each group; returns final width.
int add_vgg_stack(nn::Network<float>& net, const std::vector<std::vector<int>>& groups) {
  int in_c = 1;
  int idx = 0;
  for (size_t g = 0; g < groups.size(); ++g) {
    for (int width : groups[g]) {
      ++idx;
      const std::string base = "conv" + std::to_string(idx);
      net.add(base, std::make_unique<nn::Conv2d<float>>(in_c, width, 3));
      net.add(base + ".relu", std::make_unique<nn::Relu<float>>());
      in_c = width;
    }
    net.add("pool" + std::to_string(g + 1), std::make_unique<nn::MaxPool2<float>>());
  }
  return in_c;
}

int build_backbone(nn::Network<float>& net, SwitchBackbone b) {
  switch (b) {
    case SwitchBackbone::kCnnSmall: {
      // Three-conv shallow classifier; widths kept small for CPU training.
      net.add("conv1", std::make_unique<nn::Conv2d<float>>(1, 16, 3));
      net.add("conv1.relu", std::make_unique<nn::Relu<float>>());
      net.add("pool1", std::make_unique<nn::MaxPool2<float>>());
      net.add("conv2", std::make_unique<nn::Conv2d<float>>(16, 32, 3));
      net.add("conv2.relu", std::make_unique<nn::Relu<float>>());
      net.add("pool2", std::make_unique<nn::MaxPool2<float>>());
      net.add("conv3", std::make_unique<nn::Conv2d<float>>(32, 64, 3));
      net.add("conv3.relu", std::make_unique<nn::Relu<float>>());
      return 64;
    }
    case SwitchBackbone::kVgg16Style:
      return add_vgg_stack(net, {{64, 64},
                                 {128, 128},
                                 {256, 256, 256},
                                 {512, 512, 512},
                                 {512, 512, 512}});
    case SwitchBackbone::kVgg19Style:
      return add_vgg_stack(net, {{64, 64},
                                 {128, 128},
                                 {256, 256, 256, 256},
                                 {512, 512, 512, 512},
                                 {512, 512, 512, 512}});
    case SwitchBackbone::kResnetStyle: {
      net.add("stem", std::make_unique<nn::Conv2d<float>>(1, 16, 3));
      net.add("stem.relu", std::make_unique<nn::Relu<float>>());
      net.add("block1", std::make_unique<nn::ResidualBlock<float>>(16, 16));
      net.add("pool1", std::make_unique<nn::MaxPool2<float>>());
      net.add("block2", std::make_unique<nn::ResidualBlock<float>>(16, 32));
      net.add("pool2", std::make_unique<nn::MaxPool2<float>>());
      net.add("block3", std::make_unique<nn::ResidualBlock<float>>(32, 64));
      return 64;
    }
  }
  throw std::invalid_argument("invalid backbone enum");
}

}  // namespace

SwitchClassifier::SwitchClassifier(SwitchBackbone backbone, int num_classes, int input_size,
                                   uint64_t seed, double init_std)
    : backbone_(backbone), num_classes_(num_classes), input_size_(input_size), seed_(seed) {
  if (num_classes < 2) throw std::invalid_argument("switch needs at least 2 classes");
  if (input_size < 16) throw std::invalid_argument("switch input size below minimum 16");
  const int feat = build_backbone(net_, backbone);
  net_.add("gap", std::make_unique<nn::GlobalAvgPool<float>>());
  net_.add("fc", std::make_unique<nn::Dense<float>>(feat, 512));
  net_.add("fc.relu", std::make_unique<nn::Relu<float>>());
  net_.add("classifier", std::make_unique<nn::Dense<float>>(512, num_classes));
  nn::init_gaussian(net_, seed, init_std);
}

nn::Tensor<float> SwitchClassifier::prepare_input(const Image& patch) const {
  const Image resized = (patch.height == input_size_ && patch.width == input_size_)
                            ? patch
                            : resize_bilinear(patch, input_size_, input_size_);
  nn::Tensor<float> t(1, resized.height, resized.width);
  std::copy(resized.pixels.begin(), resized.pixels.end(), t.data.begin());
  return t;
}

std::vector<double> SwitchClassifier::forward_probs(const nn::Tensor<float>& input) {
  const nn::Tensor<float> logits = net_.forward(input);
  const std::vector<float> p = nn::softmax(logits);
  return {p.begin(), p.end()};
}

std::vector<double> SwitchClassifier::forward_probs(const Image& patch) {
  return forward_probs(prepare_input(patch));
}

int SwitchClassifier::infer_label(const nn::Tensor<float>& input) {
  return nn::argmax(forward_probs(input)) + 1;
}

double SwitchClassifier::train_step(const nn::Tensor<float>& input, int label, double lr,
                                    double momentum, bool* correct) {
  if (label < 1 || label > num_classes_)
    throw std::invalid_argument("switch train_step: label out of range");
  nn::Tensor<float> logits = net_.forward(input);
  if (correct) {
    const std::vector<float> p = nn::softmax(logits);
    *correct = (nn::argmax(p) + 1) == label;
  }
  nn::Tensor<float> dlogits;
  const float loss = nn::softmax_cross_entropy(logits, label - 1, &dlogits);
  net_.zero_grads();
  net_.backward(dlogits);
  nn::sgd_step(net_.params(), lr, momentum);
  return loss;
}

}  // namespace scnn
